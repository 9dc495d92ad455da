#include "rankguide/tensor_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace rankguide {

namespace {

static_assert(std::endian::native == std::endian::little,
              "rgt io assumes a little-endian host");

constexpr char kMagic[4] = {'R', 'G', 'T', '1'};

[[noreturn]] void bad_format(const std::string& path, std::size_t offset,
                             const std::string& what) {
    throw config_error("FormatError",
                       path + ": " + what + " at byte offset " + std::to_string(offset));
}

}  // namespace

Tensor read_rgt(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("IoError", "cannot open " + path + " for reading");
    }

    std::size_t offset = 0;
    char magic[4];
    if (!in.read(magic, 4)) bad_format(path, offset, "truncated magic");
    if (std::memcmp(magic, kMagic, 4) != 0) bad_format(path, 0, "bad magic bytes");
    offset += 4;

    std::uint32_t ndims = 0;
    if (!in.read(reinterpret_cast<char*>(&ndims), 4)) {
        bad_format(path, offset, "truncated mode count");
    }
    offset += 4;
    if (ndims == 0) bad_format(path, 4, "zero modes");

    std::vector<std::size_t> dims(ndims);
    for (std::uint32_t i = 0; i < ndims; ++i) {
        std::uint32_t d = 0;
        if (!in.read(reinterpret_cast<char*>(&d), 4)) {
            bad_format(path, offset, "truncated mode size");
        }
        if (d == 0) bad_format(path, offset, "zero mode size");
        dims[i] = d;
        offset += 4;
    }

    const std::size_t count = shape_product(dims);
    std::vector<double> data(count);
    if (count > 0 &&
        !in.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(count * sizeof(double)))) {
        bad_format(path, offset + static_cast<std::size_t>(in.gcount()), "truncated payload");
    }
    offset += count * sizeof(double);

    char extra;
    if (in.read(&extra, 1)) bad_format(path, offset, "trailing bytes");

    return Tensor(std::move(dims), std::move(data));
}

void write_rgt(const Tensor& t, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw io_error("IoError", "cannot open " + path + " for writing");
    }
    out.write(kMagic, 4);
    const std::uint32_t ndims = static_cast<std::uint32_t>(t.ndims());
    out.write(reinterpret_cast<const char*>(&ndims), 4);
    for (std::size_t d : t.dims()) {
        const std::uint32_t v = static_cast<std::uint32_t>(d);
        out.write(reinterpret_cast<const char*>(&v), 4);
    }
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!out) {
        throw io_error("IoError", "short write to " + path);
    }
}

}  // namespace rankguide
