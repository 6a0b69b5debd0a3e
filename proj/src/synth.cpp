#include "vistanet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "vistanet/dataset.hpp"
#include "vistanet/image_io.hpp"
#include "vistanet/rng.hpp"

namespace fs = std::filesystem;

namespace vistanet {

namespace {

struct Blob {
    double cx, cy, ax, ay;
};

bool inside(const Blob& b, int r, int c) {
    const double dx = (c - b.cx) / b.ax;
    const double dy = (r - b.cy) / b.ay;
    return dx * dx + dy * dy <= 1.0;
}

uint8_t to_byte(double v) {
    return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

AnnotatedFrame generate_synthetic_frame(uint64_t seed, bool bleeding, int size) {
    check(size >= 16 && size % 8 == 0,
          "synthetic frame size must be a multiple of 8 and at least 16, got " +
              std::to_string(size));

    Rng base(seed);
    Rng bg = base.substream("background");
    Rng blob_rng = base.substream("blobs");
    Rng noise = base.substream("noise");

    AnnotatedFrame frame;
    frame.image.pixels = Tensor({3, size, size});
    frame.image.id = std::string("synth_") + std::to_string(seed) + (bleeding ? "_b" : "_n");
    frame.label = bleeding ? ClassLabel::bleeding : ClassLabel::non_bleeding;

    // tissue-like background: pink-grey base, low-frequency swell, pixel noise
    const double r0 = bg.uniform(0.42, 0.60);
    const double g0 = bg.uniform(0.32, 0.48);
    const double b0 = bg.uniform(0.30, 0.46);
    const double amp = bg.uniform(0.04, 0.09);
    const double fx = bg.uniform(0.5, 2.5);
    const double fy = bg.uniform(0.5, 2.5);
    const double phase = bg.uniform(0.0, 2.0 * M_PI);

    Tensor& px = frame.image.pixels;
    const int64_t plane = static_cast<int64_t>(size) * size;
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            const double swell =
                amp * std::sin(2.0 * M_PI * (fx * c + fy * r) / size + phase);
            const int64_t i = static_cast<int64_t>(r) * size + c;
            px[0 * plane + i] = std::clamp(r0 + swell + 0.05 * (noise.uniform() - 0.5), 0.0, 1.0);
            px[1 * plane + i] = std::clamp(g0 + swell + 0.05 * (noise.uniform() - 0.5), 0.0, 1.0);
            px[2 * plane + i] = std::clamp(b0 + swell + 0.05 * (noise.uniform() - 0.5), 0.0, 1.0);
        }
    }

    Tensor mask({size, size});

    if (bleeding) {
        const int want = static_cast<int>(blob_rng.uniform_int(1, 3));
        std::vector<Blob> placed;
        const double ax_lo = size / 12.0, ax_hi = size / 6.0;

        for (int k = 0; k < want; ++k) {
            bool ok = false;
            Blob cand{};
            for (int attempt = 0; attempt < 40 && !ok; ++attempt) {
                cand.ax = blob_rng.uniform(ax_lo, ax_hi);
                cand.ay = blob_rng.uniform(ax_lo, ax_hi);
                cand.cx = blob_rng.uniform(cand.ax + 1.0, size - cand.ax - 2.0);
                cand.cy = blob_rng.uniform(cand.ay + 1.0, size - cand.ay - 2.0);
                // keep blobs 8-connectivity-separated: reject if the candidate
                // grown by 3px touches an existing blob
                Blob grown{cand.cx, cand.cy, cand.ax + 3.0, cand.ay + 3.0};
                ok = true;
                for (const Blob& other : placed) {
                    Blob other_grown{other.cx, other.cy, other.ax + 3.0, other.ay + 3.0};
                    // coarse test: do grown ellipse bounding boxes overlap and
                    // centers sit inside each other's grown extent?
                    const double gap_x = std::abs(cand.cx - other.cx);
                    const double gap_y = std::abs(cand.cy - other.cy);
                    if (gap_x <= grown.ax + other_grown.ax &&
                        gap_y <= grown.ay + other_grown.ay) {
                        ok = false;
                        break;
                    }
                }
            }
            if (!ok) continue;  // keep whatever already fit; first blob always fits
            placed.push_back(cand);

            const double br = blob_rng.uniform(0.72, 0.86);
            const double bgc = blob_rng.uniform(0.08, 0.18);
            const double bb = blob_rng.uniform(0.06, 0.16);

            int rmin = size, rmax = -1, cmin = size, cmax = -1;
            for (int r = 0; r < size; ++r) {
                for (int c = 0; c < size; ++c) {
                    if (!inside(cand, r, c)) continue;
                    const double dx = (c - cand.cx) / cand.ax;
                    const double dy = (r - cand.cy) / cand.ay;
                    const double shade = 0.10 * (dx * dx + dy * dy);
                    const int64_t i = static_cast<int64_t>(r) * size + c;
                    px[0 * plane + i] = std::clamp(br - shade + 0.03 * (noise.uniform() - 0.5), 0.0, 1.0);
                    px[1 * plane + i] = std::clamp(bgc + shade * 0.3 + 0.03 * (noise.uniform() - 0.5), 0.0, 1.0);
                    px[2 * plane + i] = std::clamp(bb + shade * 0.3 + 0.03 * (noise.uniform() - 0.5), 0.0, 1.0);
                    mask.at(r, c) = 1.0;
                    rmin = std::min(rmin, r);
                    rmax = std::max(rmax, r);
                    cmin = std::min(cmin, c);
                    cmax = std::max(cmax, c);
                }
            }
            check(rmax >= rmin, "synthetic blob rasterized to nothing");
            frame.gt_boxes.push_back(BoundingBox{static_cast<double>(cmin),
                                                 static_cast<double>(rmin),
                                                 static_cast<double>(cmax + 1),
                                                 static_cast<double>(rmax + 1)});
        }
        std::sort(frame.gt_boxes.begin(), frame.gt_boxes.end(),
                  [](const BoundingBox& a, const BoundingBox& b) {
                      if (a.area() != b.area()) return a.area() > b.area();
                      if (a.y_min != b.y_min) return a.y_min < b.y_min;
                      return a.x_min < b.x_min;
                  });
    }

    frame.mask = SegmentationMask{std::move(mask), SegmentationMask::Kind::ground_truth};
    frame.validate();
    return frame;
}

void write_synthetic_dataset(const std::string& out_dir, int count, uint64_t seed,
                             int size, bool force) {
    check(count >= 2, "count must be at least 2");
    const fs::path out(out_dir);
    if (fs::exists(out) && !fs::is_empty(out) && !force)
        throw Error("output directory exists and is not empty (use --force): " + out_dir);

    DatasetLayout layout;
    fs::create_directories(out / layout.images_bleeding);
    fs::create_directories(out / layout.masks_bleeding);
    fs::create_directories(out / layout.boxes_bleeding);
    fs::create_directories(out / layout.images_nonbleeding);
    layout.to_file((out / "layout.cfg").string());

    const int n_bleed = count - count / 2;

    std::ofstream labels((out / "labels.csv").string());
    check(static_cast<bool>(labels), "cannot write labels.csv");
    labels << "id,label\n";

    char name[32];
    for (int i = 0; i < count; ++i) {
        const bool bleeding = i < n_bleed;
        std::snprintf(name, sizeof(name), "%c%04d", bleeding ? 'b' : 'n',
                      bleeding ? i : i - n_bleed);
        const std::string stem(name);
        const uint64_t frame_seed = derive_seed(seed, "synth/" + stem);
        AnnotatedFrame frame = generate_synthetic_frame(frame_seed, bleeding, size);

        RawImage img;
        img.width = img.height = size;
        img.channels = 3;
        img.pixels.resize(static_cast<size_t>(size) * size * 3);
        const int64_t plane = static_cast<int64_t>(size) * size;
        for (int64_t p = 0; p < plane; ++p)
            for (int c = 0; c < 3; ++c)
                img.pixels[static_cast<size_t>(p) * 3 + static_cast<size_t>(c)] =
                    to_byte(frame.image.pixels[c * plane + p]);

        if (bleeding) {
            write_png((out / layout.images_bleeding / (stem + ".png")).string(), img);

            RawImage m;
            m.width = m.height = size;
            m.channels = 1;
            m.pixels.resize(static_cast<size_t>(plane));
            for (int64_t p = 0; p < plane; ++p)
                m.pixels[static_cast<size_t>(p)] = frame.mask->values[p] > 0.5 ? 255 : 0;
            write_png((out / layout.masks_bleeding / (stem + ".png")).string(), m);

            std::vector<std::pair<int, BoundingBox>> boxes;
            for (const auto& b : frame.gt_boxes) boxes.emplace_back(0, b);
            std::ofstream bf((out / layout.boxes_bleeding / (stem + ".txt")).string());
            bf << format_yolo_boxes(boxes, size, size);
        } else {
            write_png((out / layout.images_nonbleeding / (stem + ".png")).string(), img);
        }
        labels << stem << "," << (bleeding ? 1 : 0) << "\n";
    }
}

}  // namespace vistanet
