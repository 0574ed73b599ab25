#include "beamlab/mask_io.hpp"

#include <fstream>

#include "beamlab/errors.hpp"

namespace beamlab::io {
namespace {

void check_nonempty(const geo::BinaryMask& mask, const char* op) {
    if (mask.width() <= 0 || mask.height() <= 0)
        throw ValidationError(std::string(op) + ": empty mask");
}

void write_bytes(const std::string& bytes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::string format_pbm(const geo::BinaryMask& mask) {
    check_nonempty(mask, "format_pbm");
    std::string out =
        "P4\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n";
    const int row_bytes = (mask.width() + 7) / 8;
    out.reserve(out.size() + static_cast<std::size_t>(row_bytes) * mask.height());
    for (int y = 0; y < mask.height(); ++y) {
        for (int b = 0; b < row_bytes; ++b) {
            unsigned byte = 0;
            for (int bit = 0; bit < 8; ++bit) {
                const int x = b * 8 + bit;
                if (x < mask.width() && mask.get(x, y)) byte |= 0x80u >> bit;
            }
            out.push_back(static_cast<char>(byte));
        }
    }
    return out;
}

void write_pbm(const geo::BinaryMask& mask, const std::filesystem::path& path) {
    write_bytes(format_pbm(mask), path);
}

std::string format_pgm(const geo::BinaryMask& mask) {
    check_nonempty(mask, "format_pgm");
    std::string out =
        "P5\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n255\n";
    out.reserve(out.size() + static_cast<std::size_t>(mask.width()) * mask.height());
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            out.push_back(static_cast<char>(mask.get(x, y) ? 255 : 0));
    return out;
}

void write_pgm(const geo::BinaryMask& mask, const std::filesystem::path& path) {
    write_bytes(format_pgm(mask), path);
}

}  // namespace beamlab::io
