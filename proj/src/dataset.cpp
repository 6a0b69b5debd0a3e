#include "vistanet/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "vistanet/image_io.hpp"
#include "vistanet/kvconfig.hpp"
#include "vistanet/rng.hpp"

namespace fs = std::filesystem;

namespace vistanet {

namespace {

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<fs::path> sorted_files(const fs::path& dir, bool (*pred)(const fs::path&)) {
    std::vector<fs::path> out;
    if (!fs::exists(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && pred(e.path())) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

Tensor to_planar_unit(const RawImage& img) {
    check(img.channels == 3, "expected RGB raster");
    Tensor t({3, img.height, img.width});
    const size_t plane = static_cast<size_t>(img.height) * img.width;
    for (size_t i = 0; i < plane; ++i)
        for (int c = 0; c < 3; ++c)
            t[c * plane + i] = img.pixels[i * 3 + c] / 255.0;
    return t;
}

int padded_dim(int d, int multiple) {
    return ((d + multiple - 1) / multiple) * multiple;
}

// Edge-replicate pad on the bottom/right so geometry of existing pixels and
// any annotation boxes is unchanged.
Tensor pad_image(const Tensor& px, int multiple) {
    const int h = px.dim(1), w = px.dim(2);
    const int ph = padded_dim(h, multiple), pw = padded_dim(w, multiple);
    if (ph == h && pw == w) return px;
    Tensor out({3, ph, pw});
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < ph; ++i)
            for (int j = 0; j < pw; ++j)
                out.at(c, i, j) = px.at(c, std::min(i, h - 1), std::min(j, w - 1));
    return out;
}

Tensor pad_mask(const Tensor& m, int multiple) {
    const int h = m.dim(0), w = m.dim(1);
    const int ph = padded_dim(h, multiple), pw = padded_dim(w, multiple);
    if (ph == h && pw == w) return m;
    Tensor out({ph, pw});
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) out.at(i, j) = m.at(i, j);
    return out;
}

double parse_number(const std::string& tok, const std::string& where) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    check(ec == std::errc() && ptr == tok.data() + tok.size(),
          where + ": non-numeric token '" + tok + "'");
    return v;
}

}  // namespace

DatasetLayout DatasetLayout::from_file(const std::string& path) {
    auto kv = read_kv_file(path);
    DatasetLayout layout;
    for (const auto& [k, v] : kv) {
        if (k == "images_bleeding") layout.images_bleeding = v;
        else if (k == "masks_bleeding") layout.masks_bleeding = v;
        else if (k == "boxes_bleeding") layout.boxes_bleeding = v;
        else if (k == "images_nonbleeding") layout.images_nonbleeding = v;
        else throw Error("unknown layout key: " + k);
    }
    return layout;
}

void DatasetLayout::to_file(const std::string& path) const {
    std::ofstream out(path);
    check(static_cast<bool>(out), "cannot write layout file: " + path);
    out << "images_bleeding=" << images_bleeding << "\n"
        << "masks_bleeding=" << masks_bleeding << "\n"
        << "boxes_bleeding=" << boxes_bleeding << "\n"
        << "images_nonbleeding=" << images_nonbleeding << "\n";
}

std::vector<std::pair<int, BoundingBox>> parse_yolo_boxes(const std::string& text,
                                                          double width, double height) {
    std::vector<std::pair<int, BoundingBox>> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim_ws(line);
        if (t.empty()) continue;
        const std::string where = "line " + std::to_string(lineno);

        std::istringstream ls(t);
        std::vector<std::string> toks;
        std::string tok;
        while (ls >> tok) toks.push_back(tok);
        check(toks.size() == 5, where + ": expected 5 fields 'class cx cy w h'");

        const double cls = parse_number(toks[0], where);
        check(cls >= 0 && cls == std::floor(cls), where + ": class must be a nonnegative integer");
        double vals[4];
        for (int i = 0; i < 4; ++i) {
            vals[i] = parse_number(toks[static_cast<size_t>(i) + 1], where);
            check(vals[i] >= 0.0 && vals[i] <= 1.0, where + ": coordinate out of range [0,1]");
        }
        const double cx = vals[0], cy = vals[1], w = vals[2], h = vals[3];
        BoundingBox box{
            std::clamp((cx - w / 2) * width, 0.0, width),
            std::clamp((cy - h / 2) * height, 0.0, height),
            std::clamp((cx + w / 2) * width, 0.0, width),
            std::clamp((cy + h / 2) * height, 0.0, height),
        };
        check(box.x_min < box.x_max && box.y_min < box.y_max, where + ": degenerate box");
        out.emplace_back(static_cast<int>(cls), box);
    }
    return out;
}

std::string format_yolo_boxes(const std::vector<std::pair<int, BoundingBox>>& boxes,
                              double width, double height) {
    std::string out;
    char buf[160];
    for (const auto& [cls, b] : boxes) {
        b.validate(width, height);
        const double cx = (b.x_min + b.x_max) / 2 / width;
        const double cy = (b.y_min + b.y_max) / 2 / height;
        const double w = (b.x_max - b.x_min) / width;
        const double h = (b.y_max - b.y_min) / height;
        std::snprintf(buf, sizeof(buf), "%d %.9f %.9f %.9f %.9f\n", cls, cx, cy, w, h);
        out += buf;
    }
    return out;
}

std::vector<AnnotatedFrame> load_dataset(const std::string& root,
                                         const DatasetLayout& layout,
                                         int pad_multiple) {
    check(fs::exists(root), "dataset root does not exist: " + root);
    check(pad_multiple >= 1, "pad_multiple must be positive");

    const fs::path rootp(root);
    std::vector<AnnotatedFrame> frames;
    std::set<std::string> seen_ids;

    auto add_id = [&](const std::string& id) {
        check(seen_ids.insert(id).second, "duplicate image id in dataset: " + id);
    };

    // bleeding class: image + mask (+ optional boxes)
    for (const auto& img_path : sorted_files(rootp / layout.images_bleeding, is_image_file)) {
        const std::string stem = img_path.stem().string();
        add_id(stem);

        RawImage raw = read_image(img_path.string());
        const int h = raw.height, w = raw.width;

        const fs::path mask_path = rootp / layout.masks_bleeding / (stem + ".png");
        if (!fs::exists(mask_path))
            throw Error("missing mask for bleeding image: " + img_path.string());
        RawImage mraw = read_image(mask_path.string(), /*force_gray=*/true);
        check(mraw.width == w && mraw.height == h,
              "mask dims do not match image: " + mask_path.string());

        Tensor mvals({h, w});
        for (int64_t i = 0; i < mvals.size(); ++i)
            mvals[i] = mraw.pixels[static_cast<size_t>(i)] >= 128 ? 1.0 : 0.0;

        AnnotatedFrame frame;
        frame.image.pixels = pad_image(to_planar_unit(raw), pad_multiple);
        frame.image.id = stem;
        frame.label = ClassLabel::bleeding;
        frame.mask = SegmentationMask{pad_mask(mvals, pad_multiple),
                                      SegmentationMask::Kind::ground_truth};
        if (frame.mask->sum() == 0.0)
            throw Error("bleeding image has an all-zero mask: " + img_path.string());

        const fs::path box_path = rootp / layout.boxes_bleeding / (stem + ".txt");
        if (fs::exists(box_path)) {
            std::ifstream bin(box_path);
            std::stringstream ss;
            ss << bin.rdbuf();
            try {
                for (auto& [cls, box] : parse_yolo_boxes(ss.str(), w, h))
                    frame.gt_boxes.push_back(box);
            } catch (const Error& e) {
                throw Error(box_path.string() + ": " + e.what());
            }
        }
        frame.validate();
        frames.push_back(std::move(frame));
    }

    // box files must reference an existing bleeding image
    for (const auto& box_path : sorted_files(rootp / layout.boxes_bleeding,
                                             [](const fs::path& p) {
                                                 return p.extension() == ".txt";
                                             })) {
        const std::string stem = box_path.stem().string();
        if (!seen_ids.count(stem))
            throw Error("box file references nonexistent image: " + box_path.string());
    }

    // non-bleeding class: image only, mask is all-zero by construction
    for (const auto& img_path :
         sorted_files(rootp / layout.images_nonbleeding, is_image_file)) {
        const std::string stem = img_path.stem().string();
        add_id(stem);

        RawImage raw = read_image(img_path.string());
        AnnotatedFrame frame;
        frame.image.pixels = pad_image(to_planar_unit(raw), pad_multiple);
        frame.image.id = stem;
        frame.label = ClassLabel::non_bleeding;
        Tensor zeros({frame.image.height(), frame.image.width()});
        frame.mask = SegmentationMask{std::move(zeros), SegmentationMask::Kind::ground_truth};
        frame.validate();
        frames.push_back(std::move(frame));
    }

    std::sort(frames.begin(), frames.end(),
              [](const AnnotatedFrame& a, const AnnotatedFrame& b) {
                  return a.image.id < b.image.id;
              });
    return frames;
}

DatasetSplit split_dataset(const std::vector<AnnotatedFrame>& frames,
                           double val_fraction, uint64_t seed) {
    check(val_fraction > 0.0 && val_fraction < 1.0, "val_fraction must be in (0,1)");
    check(frames.size() >= 2, "need at least 2 frames to split");

    std::map<int, std::vector<size_t>> by_class;
    for (size_t i = 0; i < frames.size(); ++i)
        by_class[class_index(frames[i].label)].push_back(i);

    std::vector<bool> in_val(frames.size(), false);
    for (auto& [cls, idx] : by_class) {
        check(idx.size() >= 2, "class " + std::to_string(cls) + " has fewer than 2 members");
        Rng rng = Rng(seed).substream("split/class" + std::to_string(cls));
        rng.shuffle(idx);
        auto n_val = static_cast<size_t>(
            std::llround(val_fraction * static_cast<double>(idx.size())));
        n_val = std::clamp<size_t>(n_val, 1, idx.size() - 1);
        for (size_t k = 0; k < n_val; ++k) in_val[idx[k]] = true;
    }

    DatasetSplit split;
    split.seed = seed;
    for (size_t i = 0; i < frames.size(); ++i)
        (in_val[i] ? split.val : split.train).push_back(frames[i]);
    return split;
}

std::vector<BoundingBox> mask_to_boxes(const SegmentationMask& mask, double threshold,
                                       int min_area) {
    check(threshold > 0.0 && threshold < 1.0, "threshold must be in (0,1)");
    const int h = mask.height(), w = mask.width();
    std::vector<char> fg(static_cast<size_t>(h) * w);
    for (int64_t i = 0; i < mask.values.size(); ++i) fg[static_cast<size_t>(i)] = mask.values[i] >= threshold;

    std::vector<char> seen(static_cast<size_t>(h) * w, 0);
    std::vector<BoundingBox> boxes;
    std::vector<int> stack;

    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const int idx0 = r * w + c;
            if (!fg[static_cast<size_t>(idx0)] || seen[static_cast<size_t>(idx0)]) continue;
            int rmin = r, rmax = r, cmin = c, cmax = c, area = 0;
            stack.assign(1, idx0);
            seen[static_cast<size_t>(idx0)] = 1;
            while (!stack.empty()) {
                const int idx = stack.back();
                stack.pop_back();
                const int pr = idx / w, pc = idx % w;
                ++area;
                rmin = std::min(rmin, pr);
                rmax = std::max(rmax, pr);
                cmin = std::min(cmin, pc);
                cmax = std::max(cmax, pc);
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        if (!dr && !dc) continue;
                        const int nr = pr + dr, nc = pc + dc;
                        if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
                        const int nidx = nr * w + nc;
                        if (fg[static_cast<size_t>(nidx)] && !seen[static_cast<size_t>(nidx)]) {
                            seen[static_cast<size_t>(nidx)] = 1;
                            stack.push_back(nidx);
                        }
                    }
                }
            }
            if (area >= min_area) {
                boxes.push_back(BoundingBox{static_cast<double>(cmin),
                                            static_cast<double>(rmin),
                                            static_cast<double>(cmax + 1),
                                            static_cast<double>(rmax + 1)});
            }
        }
    }
    std::sort(boxes.begin(), boxes.end(), [](const BoundingBox& a, const BoundingBox& b) {
        if (a.area() != b.area()) return a.area() > b.area();
        if (a.y_min != b.y_min) return a.y_min < b.y_min;
        return a.x_min < b.x_min;
    });
    return boxes;
}

}  // namespace vistanet
