#include "vistanet/image_io.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <jpeglib.h>
#include <png.h>

#include "vistanet/common.hpp"

namespace vistanet {

namespace {

RawImage read_png_file(const std::string& path, bool force_gray) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw Error("unreadable image (png): " + path + ": " + image.message);

    image.format = force_gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    RawImage out;
    out.width = static_cast<int>(image.width);
    out.height = static_cast<int>(image.height);
    out.channels = force_gray ? 1 : 3;
    out.pixels.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
        png_image_free(&image);
        throw Error("unreadable image (png): " + path + ": " + image.message);
    }
    return out;
}

struct JpegErrorCtx {
    jpeg_error_mgr mgr;
    jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_trampoline(j_common_ptr cinfo) {
    auto* ctx = reinterpret_cast<JpegErrorCtx*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, ctx->message);
    longjmp(ctx->jump, 1);
}

RawImage read_jpeg_file(const std::string& path, bool force_gray) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw Error("unreadable image (jpeg): " + path);

    jpeg_decompress_struct cinfo;
    JpegErrorCtx err{};
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = jpeg_error_trampoline;

    RawImage out;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        std::fclose(fp);
        throw Error("unreadable image (jpeg): " + path + ": " + err.message);
    }

    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, fp);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = force_gray ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);

    out.width = static_cast<int>(cinfo.output_width);
    out.height = static_cast<int>(cinfo.output_height);
    out.channels = static_cast<int>(cinfo.output_components);
    out.pixels.resize(static_cast<size_t>(out.width) * out.height * out.channels);

    const size_t row_stride = static_cast<size_t>(out.width) * out.channels;
    while (cinfo.output_scanline < cinfo.output_height) {
        uint8_t* row = out.pixels.data() + cinfo.output_scanline * row_stride;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    std::fclose(fp);
    return out;
}

}  // namespace

RawImage read_image(const std::string& path, bool force_gray) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("unreadable image: " + path);
    unsigned char magic[3] = {0, 0, 0};
    in.read(reinterpret_cast<char*>(magic), 3);
    in.close();

    if (magic[0] == 0x89 && magic[1] == 'P' && magic[2] == 'N')
        return read_png_file(path, force_gray);
    if (magic[0] == 0xFF && magic[1] == 0xD8)
        return read_jpeg_file(path, force_gray);
    throw Error("unreadable image (not PNG or JPEG): " + path);
}

void write_png(const std::string& path, const RawImage& img) {
    check(img.channels == 1 || img.channels == 3, "write_png: channels must be 1 or 3");
    check(img.width > 0 && img.height > 0 &&
              img.pixels.size() ==
                  static_cast<size_t>(img.width) * img.height * img.channels,
          "write_png: inconsistent raster");

    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;

    if (!png_image_write_to_file(&image, path.c_str(), 0, img.pixels.data(), 0, nullptr))
        throw Error("cannot write png: " + path + ": " + image.message);
}

}  // namespace vistanet
