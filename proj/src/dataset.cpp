#include "antgan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "antgan/binio.hpp"

namespace antgan {

namespace {
std::atomic<std::uint64_t> g_mask_reads{0};

constexpr char kMagic[4] = {'A', 'N', 'T', 'D'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::uint64_t mask_reads() { return g_mask_reads.load(); }
void reset_mask_reads() { g_mask_reads.store(0); }
void detail::count_mask_read() { g_mask_reads.fetch_add(1, std::memory_order_relaxed); }

namespace {

struct Ellipse {
    double cx, cy;      // center, pixels
    double a, b;        // semi-axes, pixels
    double cos_t, sin_t;

    // < 1 inside, 1 on the boundary.
    double radial(double x, double y) const {
        const double dx = x - cx, dy = y - cy;
        const double u = (dx * cos_t + dy * sin_t) / a;
        const double v = (-dx * sin_t + dy * cos_t) / b;
        return u * u + v * v;
    }
};

Ellipse random_ellipse(Rng& rng, double cx, double cy, double a, double b) {
    const double t = rng.uniform() * 3.14159265358979323846;
    return {cx, cy, a, b, std::cos(t), std::sin(t)};
}

// Smooth low-frequency texture field in [-1,1]-ish units before scaling.
struct TextureField {
    struct Wave {
        double kx, ky, phase, amp;
    };
    std::vector<Wave> waves;

    static TextureField make(Rng& rng, double size) {
        TextureField f;
        for (int j = 0; j < 3; ++j) {
            Wave w;
            const double freq = 1.0 + rng.uniform() * 2.0;  // 1..3 periods per image
            const double dir = rng.uniform() * 3.14159265358979323846;
            w.kx = 6.283185307179586 * freq * std::cos(dir) / size;
            w.ky = 6.283185307179586 * freq * std::sin(dir) / size;
            w.phase = rng.uniform() * 6.283185307179586;
            w.amp = 0.015 + 0.035 * rng.uniform();
            f.waves.push_back(w);
        }
        return f;
    }

    double at(double x, double y) const {
        double v = 0.0;
        for (const auto& w : waves) v += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
        return v;
    }
};

// One phantom in [0,1] storage units plus its lesion mask.
void render_phantom(Rng& rng, std::int64_t S, bool with_lesions, std::vector<float>& img,
                    std::vector<float>& mask) {
    const double s = static_cast<double>(S);
    img.assign(static_cast<std::size_t>(S * S), 0.0f);
    mask.assign(static_cast<std::size_t>(S * S), 0.0f);

    // Background stays clearly darker than tissue but away from the extreme
    // end of the intensity range, where the output nonlinearity saturates.
    const double background = 0.14 + 0.04 * rng.uniform();
    const double tissue_base = 0.42 + 0.06 * rng.uniform();
    const Ellipse tissue = random_ellipse(rng,
                                          s * (0.5 + 0.05 * (rng.uniform() - 0.5)),
                                          s * (0.5 + 0.05 * (rng.uniform() - 0.5)),
                                          s * (0.30 + 0.08 * rng.uniform()),
                                          s * (0.28 + 0.08 * rng.uniform()));
    const TextureField texture = TextureField::make(rng, s);

    std::vector<Ellipse> lesions;
    if (with_lesions) {
        const int n_lesions = 1 + static_cast<int>(rng.uniform_int(3));
        for (int k = 0; k < n_lesions; ++k) {
            // Center well inside the tissue so the surrounding ring is tissue.
            const double rho = 0.45 * std::sqrt(rng.uniform());
            const double phi = rng.uniform() * 6.283185307179586;
            const double lx = tissue.cx + rho * tissue.a * std::cos(phi) * tissue.cos_t -
                              rho * tissue.b * std::sin(phi) * tissue.sin_t;
            const double ly = tissue.cy + rho * tissue.a * std::cos(phi) * tissue.sin_t +
                              rho * tissue.b * std::sin(phi) * tissue.cos_t;
            const double la = s * (0.045 + 0.055 * rng.uniform());
            const double lb = s * (0.045 + 0.055 * rng.uniform());
            lesions.push_back(random_ellipse(rng, lx, ly, la, lb));
        }
    }

    for (std::int64_t i = 0; i < S; ++i) {
        for (std::int64_t j = 0; j < S; ++j) {
            const double x = static_cast<double>(j) + 0.5, y = static_cast<double>(i) + 0.5;
            const double e = tissue.radial(x, y);
            // Feathered tissue edge, a few pixels wide; a hard edge would put
            // sub-pixel localization error above the segmentation threshold.
            const double edge = std::clamp((1.0 - e) / 0.25, 0.0, 1.0);
            const double w = edge * edge * (3.0 - 2.0 * edge);
            double tissue_v = tissue_base + texture.at(x, y);
            tissue_v = std::clamp(tissue_v, 0.30, 0.58);
            double v = background + (tissue_v - background) * w;
            bool in_lesion = false;
            for (const auto& l : lesions)
                if (l.radial(x, y) <= 1.0) in_lesion = true;
            if (in_lesion) {
                v = tissue_v + 0.38;  // tissue <= 0.58, so lesions stay below 0.96
                mask[static_cast<std::size_t>(i * S + j)] = 1.0f;
            }
            img[static_cast<std::size_t>(i * S + j)] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
}

SliceSample to_sample(std::int64_t S, const std::vector<float>& img01,
                      const std::vector<float>& mask01, Label label) {
    Tensor<float> image = Tensor<float>::zeros({1, S, S});
    Tensor<float> mask = Tensor<float>::zeros({1, S, S});
    for (std::int64_t i = 0; i < S * S; ++i) {
        image.data()[i] = 2.0f * img01[static_cast<std::size_t>(i)] - 1.0f;
        mask.data()[i] = mask01[static_cast<std::size_t>(i)];
    }
    return SliceSample(std::move(image), std::move(mask), label);
}

void write_record(std::ostream& os, const SliceSample& rec, std::int64_t S) {
    binio::write_u8(os, static_cast<std::uint8_t>(rec.label));
    // back to [0,1] storage
    std::vector<float> buf(static_cast<std::size_t>(S * S));
    for (std::int64_t i = 0; i < S * S; ++i)
        buf[static_cast<std::size_t>(i)] = (rec.image.data()[i] + 1.0f) * 0.5f;
    binio::write_f32_array(os, buf.data(), S * S);
    const Tensor<float>& m = rec.mask();
    for (std::int64_t i = 0; i < S * S; ++i)
        binio::write_u8(os, m.data()[i] != 0.0f ? 1 : 0);
}

}  // namespace

void make_phantoms(std::uint64_t seed, std::int64_t n_normal, std::int64_t n_abnormal,
                   std::int64_t size, const std::string& out_path) {
    if (size < 8 || size % 4 != 0) throw UsageError("make_phantoms: size must be >= 8 and divisible by 4");
    if (n_normal < 1 || n_abnormal < 1) throw UsageError("make_phantoms: counts must be >= 1");

    Dataset ds;
    ds.image_size = size;
    Rng master(seed);
    std::vector<float> img, mask;
    for (std::int64_t i = 0; i < n_normal; ++i) {
        Rng r = master.split();
        render_phantom(r, size, false, img, mask);
        ds.normals.push_back(to_sample(size, img, mask, Label::normal));
    }
    for (std::int64_t i = 0; i < n_abnormal; ++i) {
        Rng r = master.split();
        render_phantom(r, size, true, img, mask);
        ds.abnormals.push_back(to_sample(size, img, mask, Label::abnormal));
    }
    save_dataset(ds, out_path);
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os.write(kMagic, 4);
    binio::write_u32(os, kVersion);
    binio::write_u32(os, static_cast<std::uint32_t>(ds.normals.size() + ds.abnormals.size()));
    binio::write_u32(os, static_cast<std::uint32_t>(ds.image_size));
    for (const auto& rec : ds.normals) write_record(os, rec, ds.image_size);
    for (const auto& rec : ds.abnormals) write_record(os, rec, ds.image_size);
    if (!os) throw IoError("write failed for '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "' for reading");
    char magic[4];
    if (!is.read(magic, 4))
        throw FormatError("truncated file while reading magic at byte offset 0 in '" + path + "'");
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("bad magic at byte offset 0 in '" + path + "' (expected ANTD)");
    const std::uint32_t version = binio::read_u32(is, "version");
    if (version != kVersion)
        throw FormatError("unsupported ANTD version " + std::to_string(version));
    const std::uint32_t count = binio::read_u32(is, "count");
    const std::uint32_t size = binio::read_u32(is, "image size");
    if (size < 4 || size > 4096) throw FormatError("implausible image size " + std::to_string(size));
    const std::int64_t S = size;

    Dataset ds;
    ds.image_size = S;
    std::vector<float> buf(static_cast<std::size_t>(S * S));
    for (std::uint32_t r = 0; r < count; ++r) {
        const std::uint8_t label = binio::read_u8(is, "label of record " + std::to_string(r));
        if (label > 1)
            throw FormatError("invalid label " + std::to_string(label) + " in record " +
                              std::to_string(r));
        binio::read_f32_array(is, buf.data(), S * S, "image of record " + std::to_string(r));
        Tensor<float> image = Tensor<float>::zeros({1, S, S});
        for (std::int64_t i = 0; i < S * S; ++i) {
            const float v = buf[static_cast<std::size_t>(i)];
            if (!(v >= 0.0f && v <= 1.0f))
                throw FormatError("image value outside [0,1] in record " + std::to_string(r));
            image.data()[i] = 2.0f * v - 1.0f;
        }
        Tensor<float> mask = Tensor<float>::zeros({1, S, S});
        for (std::int64_t i = 0; i < S * S; ++i) {
            const std::uint8_t m = binio::read_u8(is, "mask of record " + std::to_string(r));
            if (m > 1) throw FormatError("non-binary mask byte in record " + std::to_string(r));
            mask.data()[i] = static_cast<float>(m);
        }
        const Label lab = static_cast<Label>(label);
        if (lab == Label::normal) {
            if (mask.carray().sum() != 0.0f)
                throw FormatError("normal record " + std::to_string(r) + " has a nonzero mask");
            ds.normals.emplace_back(std::move(image), std::move(mask), lab);
        } else {
            ds.abnormals.emplace_back(std::move(image), std::move(mask), lab);
        }
    }
    if (is.peek() != EOF) throw FormatError("trailing bytes after last record in '" + path + "'");
    return ds;
}

SplitPools split_dataset(const Dataset& ds, std::uint64_t split_seed) {
    SplitPools pools;
    Rng rng = Rng::derive(split_seed, 0x5917);  // fixed stream tag for the split
    auto split_pool = [&rng](const std::vector<SliceSample>& pool,
                             std::vector<const SliceSample*>& train,
                             std::vector<const SliceSample*>& test) {
        std::vector<std::size_t> idx(pool.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng.uniform_int(i)]);
        const std::size_t n_train = pool.size() * 4 / 5;
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < n_train ? train : test).push_back(&pool[idx[i]]);
    };
    split_pool(ds.normals, pools.train_normal, pools.test_normal);
    split_pool(ds.abnormals, pools.train_abnormal, pools.test_abnormal);
    return pools;
}

const SliceSample& sample(const std::vector<const SliceSample*>& pool, Rng& rng) {
    if (pool.empty()) throw UsageError("sample: empty pool");
    return *pool[rng.uniform_int(pool.size())];
}

void export_image(const Tensor<float>& t, const std::string& path) {
    if (t.rank() != 3 || t.dim(0) != 1)
        throw DimensionError("export_image: expected [1,S,S], got " + shape_str(t.shape()));
    if (!t.all_finite()) throw NumericError("export_image: non-finite values");
    const std::int64_t H = t.dim(1), W = t.dim(2);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << "P5\n" << W << " " << H << "\n255\n";
    for (std::int64_t i = 0; i < H * W; ++i) {
        const double v = (static_cast<double>(t.data()[i]) + 1.0) * 127.5;
        const int b = std::clamp(static_cast<int>(std::floor(v + 0.5)), 0, 255);
        os.put(static_cast<char>(static_cast<unsigned char>(b)));
    }
    if (!os) throw IoError("write failed for '" + path + "'");
}

std::uint64_t file_checksum(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "' for checksum");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
        for (std::streamsize i = 0; i < is.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (is.eof()) break;
    }
    return h;
}

}  // namespace antgan
