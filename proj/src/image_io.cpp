#include "restorekit/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "restorekit/errors.hpp"

namespace restorekit {

namespace fs = std::filesystem;

namespace {

std::string lower_ext(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return ext;
}

std::vector<unsigned char> read_all(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed for " + path.string());
    return bytes;
}

unsigned quantize(double v, unsigned maxval) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<unsigned>(std::lround(c * maxval));
}

// ---------------------------------------------------------------------------
// PNG

struct MemoryReader {
    const std::vector<unsigned char>* bytes;
    std::size_t offset;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t count) {
    auto* reader = static_cast<MemoryReader*>(png_get_io_ptr(png));
    if (reader->offset + count > reader->bytes->size()) png_error(png, "truncated PNG stream");
    std::memcpy(out, reader->bytes->data() + reader->offset, count);
    reader->offset += count;
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t count) {
    auto* out = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + count);
}

void png_flush_noop(png_structp) {}

[[noreturn]] void png_throw(png_structp, png_const_charp msg) { throw FormatError(std::string("PNG: ") + msg); }
void png_warn(png_structp, png_const_charp) {}

struct PngReadGuard {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReadGuard() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct PngWriteGuard {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriteGuard() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

Image decode_png_impl(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw FormatError("not a PNG stream");
    PngReadGuard g;
    g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_throw, png_warn);
    if (!g.png) throw FormatError("png_create_read_struct failed");
    g.info = png_create_info_struct(g.png);
    if (!g.info) throw FormatError("png_create_info_struct failed");
    MemoryReader reader{&bytes, 0};
    png_set_read_fn(g.png, &reader, png_read_from_memory);
    png_read_info(g.png, g.info);

    const int color_type = png_get_color_type(g.png, g.info);
    int bit_depth = png_get_bit_depth(g.png, g.info);
    if (color_type & PNG_COLOR_MASK_ALPHA || png_get_valid(g.png, g.info, PNG_INFO_tRNS)) {
        throw FormatError("PNG with alpha channel is not supported (1 or 3 channels only)");
    }
    if (color_type == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(g.png);
        bit_depth = 8;
    }
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
        png_set_expand_gray_1_2_4_to_8(g.png);
        bit_depth = 8;
    }
    if (bit_depth == 16) png_set_swap(g.png);  // host little-endian 16-bit words
    png_read_update_info(g.png, g.info);

    const int width = static_cast<int>(png_get_image_width(g.png, g.info));
    const int height = static_cast<int>(png_get_image_height(g.png, g.info));
    const int channels = png_get_channels(g.png, g.info);
    if (channels != 1 && channels != 3) {
        throw FormatError("unsupported PNG channel count " + std::to_string(channels));
    }
    const std::size_t rowbytes = png_get_rowbytes(g.png, g.info);
    std::vector<unsigned char> raw(rowbytes * height);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) rows[y] = raw.data() + y * rowbytes;
    png_read_image(g.png, rows.data());
    png_read_end(g.png, nullptr);

    std::vector<double> data(static_cast<std::size_t>(height) * width * channels);
    if (bit_depth == 16) {
        for (std::size_t i = 0; i < data.size(); ++i) {
            std::uint16_t v;
            std::memcpy(&v, raw.data() + 2 * i, 2);
            data[i] = v / 65535.0;
        }
    } else {
        for (int y = 0; y < height; ++y) {
            for (std::size_t k = 0; k < static_cast<std::size_t>(width) * channels; ++k) {
                data[static_cast<std::size_t>(y) * width * channels + k] = rows[y][k] / 255.0;
            }
        }
    }
    return Image(height, width, channels, std::move(data));
}

std::vector<unsigned char> encode_png_impl(const Image& img, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16) throw FormatError("PNG bit depth must be 8 or 16");
    PngWriteGuard g;
    g.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_throw, png_warn);
    if (!g.png) throw FormatError("png_create_write_struct failed");
    g.info = png_create_info_struct(g.png);
    if (!g.info) throw FormatError("png_create_info_struct failed");

    std::vector<unsigned char> out;
    png_set_write_fn(g.png, &out, png_write_to_vector, png_flush_noop);
    const int color = img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    png_set_IHDR(g.png, g.info, img.width(), img.height(), bit_depth, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(g.png, g.info);

    const std::size_t row_values = static_cast<std::size_t>(img.width()) * img.channels();
    const std::size_t bytes_per = bit_depth == 16 ? 2 : 1;
    std::vector<unsigned char> row(row_values * bytes_per);
    auto data = img.data();
    for (int y = 0; y < img.height(); ++y) {
        for (std::size_t k = 0; k < row_values; ++k) {
            const double v = data[static_cast<std::size_t>(y) * row_values + k];
            if (bit_depth == 16) {
                const unsigned q = quantize(v, 65535);
                row[2 * k] = static_cast<unsigned char>(q >> 8);  // PNG is big-endian
                row[2 * k + 1] = static_cast<unsigned char>(q & 0xFF);
            } else {
                row[k] = static_cast<unsigned char>(quantize(v, 255));
            }
        }
        png_write_row(g.png, row.data());
    }
    png_write_end(g.png, nullptr);
    return out;
}

// ---------------------------------------------------------------------------
// PNM (binary P5/P6)

Image decode_pnm(const std::vector<unsigned char>& bytes) {
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> long {
        skip_ws();
        long v = 0;
        bool any = false;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos++] - '0');
            any = true;
            if (v > 1'000'000'000) throw FormatError("PNM header value too large");
        }
        if (!any) throw FormatError("malformed PNM header");
        return v;
    };
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
        throw FormatError("not a binary PGM/PPM (P5/P6) stream");
    }
    const int channels = bytes[1] == '6' ? 3 : 1;
    pos = 2;
    const long width = read_int();
    const long height = read_int();
    const long maxval = read_int();
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) throw FormatError("invalid PNM header");
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError("malformed PNM header");
    ++pos;
    const std::size_t n = static_cast<std::size_t>(width) * height * channels;
    const std::size_t bps = maxval > 255 ? 2 : 1;
    if (bytes.size() - pos < n * bps) throw FormatError("truncated PNM pixel data");
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) {
        unsigned v = bps == 2 ? (static_cast<unsigned>(bytes[pos + 2 * i]) << 8) | bytes[pos + 2 * i + 1]
                              : bytes[pos + i];
        data[i] = static_cast<double>(v) / static_cast<double>(maxval);
    }
    return Image(static_cast<int>(height), static_cast<int>(width), channels, std::move(data));
}

std::vector<unsigned char> encode_pnm(const Image& img, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16) throw FormatError("PNM bit depth must be 8 or 16");
    const unsigned maxval = bit_depth == 16 ? 65535 : 255;
    std::ostringstream header;
    header << (img.channels() == 3 ? "P6" : "P5") << '\n'
           << img.width() << ' ' << img.height() << '\n'
           << maxval << '\n';
    const std::string h = header.str();
    std::vector<unsigned char> out(h.begin(), h.end());
    for (double v : img.data()) {
        const unsigned q = quantize(v, maxval);
        if (bit_depth == 16) out.push_back(static_cast<unsigned char>(q >> 8));
        out.push_back(static_cast<unsigned char>(q & 0xFF));
    }
    return out;
}

}  // namespace

std::vector<unsigned char> encode_png(const Image& img, int bit_depth) { return encode_png_impl(img, bit_depth); }

Image decode_png(const std::vector<unsigned char>& bytes) { return decode_png_impl(bytes); }

Image load_image(const fs::path& path) {
    const auto bytes = read_all(path);
    if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return decode_png_impl(bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P') return decode_pnm(bytes);
    throw FormatError("unrecognized image format: " + path.string());
}

void save_image(const Image& img, const fs::path& path, int bit_depth) {
    const std::string ext = lower_ext(path);
    if (ext == ".png") {
        write_file_atomic(path, encode_png_impl(img, bit_depth));
    } else if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
        write_file_atomic(path, encode_pnm(img, bit_depth));
    } else {
        throw FormatError("unsupported output extension '" + ext + "'");
    }
}

void write_file_atomic(const fs::path& path, const std::vector<unsigned char>& bytes) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

void write_file_atomic(const fs::path& path, const std::string& text) {
    write_file_atomic(path, std::vector<unsigned char>(text.begin(), text.end()));
}

std::vector<fs::path> list_images(const fs::path& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = lower_ext(entry.path());
        if (ext == ".png" || ext == ".ppm" || ext == ".pgm" || ext == ".pnm") out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace restorekit
