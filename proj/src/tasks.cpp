#include "seprank/tasks.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace seprank {

void CopyConfig::validate() const {
    if (m < 1) throw std::invalid_argument("CopyConfig: m >= 1 required");
    if (n < 2) throw std::invalid_argument("CopyConfig: n >= 2 required");
}

void SimConfig::validate() const {
    if (t % 2 != 0 || t < 4) throw std::invalid_argument("SimConfig: even T >= 4 required");
    if (m % 2 != 0 || m == 0) throw std::invalid_argument("SimConfig: even m >= 2 required");
    if (m >= t / 2) throw std::invalid_argument("SimConfig: m < T/2 required");
    if (n < 2) throw std::invalid_argument("SimConfig: n >= 2 required");
}

TaskSample gen_copy(const CopyConfig& cfg, Rng& rng) {
    cfg.validate();
    const Vocabulary vocab{cfg.n};
    const std::size_t t = cfg.seq_len();
    std::uniform_int_distribution<std::size_t> sym(1, cfg.n);
    TaskSample s;
    s.input.assign(t, vocab.blank_id());
    s.target.assign(t, vocab.blank_id());
    for (std::size_t i = 0; i < cfg.m; ++i) {
        const std::size_t d = sym(rng);
        s.input[i] = d;
        s.target[t - cfg.m + i] = d;
    }
    s.input[cfg.m + cfg.b] = vocab.trigger_id();  // position m+B+1, 1-based
    return s;
}

double data_accuracy(const std::vector<std::vector<std::size_t>>& preds,
                     const std::vector<std::vector<std::size_t>>& targets, std::size_t m,
                     std::size_t b) {
    if (preds.size() != targets.size() || preds.empty())
        throw std::invalid_argument("data_accuracy: sample count mismatch");
    const std::size_t t = b + 2 * m;
    std::size_t hits = 0;
    for (std::size_t j = 0; j < preds.size(); ++j) {
        if (preds[j].size() != t || targets[j].size() != t)
            throw std::invalid_argument("data_accuracy: sequence length mismatch");
        for (std::size_t pos = m + b; pos < t; ++pos) {
            if (preds[j][pos] == targets[j][pos]) ++hits;
        }
    }
    return static_cast<double>(hits) / (static_cast<double>(preds.size()) * static_cast<double>(m));
}

TaskSample gen_sim(const SimConfig& cfg, Rng& rng) {
    cfg.validate();
    const Vocabulary vocab{cfg.n};
    std::uniform_int_distribution<std::size_t> sym(1, cfg.n);
    std::uniform_int_distribution<int> cls(0, 2);
    std::uniform_int_distribution<std::size_t> start(1, cfg.t / 2 - cfg.m);
    TaskSample s;
    s.input.assign(cfg.t, vocab.blank_id());
    s.label = cls(rng);
    const std::size_t pos = start(rng);  // 1-based index of s1's first symbol
    std::vector<std::size_t> s1(cfg.m), s2(cfg.m);
    for (auto& v : s1) v = sym(rng);
    auto differing = [&](std::size_t from) {
        std::uniform_int_distribution<std::size_t> off(1, cfg.n - 1);
        return (from - 1 + off(rng)) % cfg.n + 1;
    };
    switch (s.label) {
        case kSimClassFull:
            s2 = s1;
            break;
        case kSimClassZero:
            for (std::size_t i = 0; i < cfg.m; ++i) s2[i] = differing(s1[i]);
            break;
        case kSimClassHalf: {
            // A uniformly drawn half of the positions match exactly.
            std::vector<std::size_t> idx(cfg.m);
            std::iota(idx.begin(), idx.end(), 0);
            std::shuffle(idx.begin(), idx.end(), rng);
            std::vector<bool> match(cfg.m, false);
            for (std::size_t i = 0; i < cfg.m / 2; ++i) match[idx[i]] = true;
            for (std::size_t i = 0; i < cfg.m; ++i)
                s2[i] = match[i] ? s1[i] : differing(s1[i]);
            break;
        }
        default: break;
    }
    for (std::size_t i = 0; i < cfg.m; ++i) {
        s.input[pos - 1 + i] = s1[i];
        s.input[pos - 1 + cfg.t / 2 + i] = s2[i];
    }
    return s;
}

double bits_memorized(std::size_t m, std::size_t n) {
    if (n < 2) throw std::invalid_argument("bits_memorized: n >= 2 required");
    return static_cast<double>(m) * std::log2(static_cast<double>(n));
}

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                      std::istreambuf_iterator<char>());
}

bool is_gzip(const std::vector<unsigned char>& bytes) {
    return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

std::vector<unsigned char> gunzip(const std::vector<unsigned char>& bytes) {
    z_stream strm{};
    if (inflateInit2(&strm, 16 + MAX_WBITS) != Z_OK)
        throw std::runtime_error("gunzip: inflateInit2 failed");
    std::vector<unsigned char> out;
    out.reserve(bytes.size() * 4);
    unsigned char buf[1 << 16];
    strm.next_in = const_cast<unsigned char*>(bytes.data());
    strm.avail_in = static_cast<unsigned>(bytes.size());
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        strm.next_out = buf;
        strm.avail_out = sizeof(buf);
        rc = inflate(&strm, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&strm);
            throw std::runtime_error("gunzip: corrupt stream");
        }
        out.insert(out.end(), buf, buf + (sizeof(buf) - strm.avail_out));
    }
    inflateEnd(&strm);
    return out;
}

std::uint32_t be32(const unsigned char* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) |
           std::uint32_t(p[3]);
}

void put_be32(std::ofstream& out, std::uint32_t v) {
    unsigned char p[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<char*>(p), 4);
}

}  // namespace

MnistData load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    auto img_bytes = read_file(images_path);
    if (is_gzip(img_bytes)) img_bytes = gunzip(img_bytes);
    auto lbl_bytes = read_file(labels_path);
    if (is_gzip(lbl_bytes)) lbl_bytes = gunzip(lbl_bytes);

    if (img_bytes.size() < 16) throw std::runtime_error("idx: truncated image header");
    if (be32(img_bytes.data()) != 0x00000803u)
        throw std::runtime_error("idx: bad image magic (want 0x00000803)");
    const std::size_t count = be32(img_bytes.data() + 4);
    const std::size_t rows = be32(img_bytes.data() + 8);
    const std::size_t cols = be32(img_bytes.data() + 12);
    const std::size_t pixels = rows * cols;
    if (img_bytes.size() != 16 + count * pixels) throw std::runtime_error("idx: truncated image data");

    if (lbl_bytes.size() < 8) throw std::runtime_error("idx: truncated label header");
    if (be32(lbl_bytes.data()) != 0x00000801u)
        throw std::runtime_error("idx: bad label magic (want 0x00000801)");
    const std::size_t lbl_count = be32(lbl_bytes.data() + 4);
    if (lbl_bytes.size() != 8 + lbl_count) throw std::runtime_error("idx: truncated label data");
    if (lbl_count != count) throw std::runtime_error("idx: image/label count mismatch");

    MnistData data;
    data.count = count;
    data.pixels = pixels;
    data.images.resize(count * pixels);
    for (std::size_t i = 0; i < count * pixels; ++i) {
        data.images[i] = static_cast<float>(img_bytes[16 + i]) / 255.0f;
    }
    data.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) data.labels[i] = lbl_bytes[8 + i];
    return data;
}

void write_mnist_idx(const std::string& images_path, const std::string& labels_path,
                     const MnistData& data) {
    const std::size_t side = static_cast<std::size_t>(std::lround(std::sqrt(double(data.pixels))));
    const std::size_t rows = side * side == data.pixels ? side : data.pixels;
    const std::size_t cols = side * side == data.pixels ? side : 1;
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("cannot write " + images_path);
    put_be32(img, 0x00000803u);
    put_be32(img, static_cast<std::uint32_t>(data.count));
    put_be32(img, static_cast<std::uint32_t>(rows));
    put_be32(img, static_cast<std::uint32_t>(cols));
    for (float v : data.images) {
        const unsigned char b = static_cast<unsigned char>(std::lround(v * 255.0f));
        img.write(reinterpret_cast<const char*>(&b), 1);
    }
    std::ofstream lbl(labels_path, std::ios::binary);
    if (!lbl) throw std::runtime_error("cannot write " + labels_path);
    put_be32(lbl, 0x00000801u);
    put_be32(lbl, static_cast<std::uint32_t>(data.count));
    for (int v : data.labels) {
        const unsigned char b = static_cast<unsigned char>(v);
        lbl.write(reinterpret_cast<const char*>(&b), 1);
    }
}

std::vector<std::size_t> make_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    if (seed == 0) return perm;  // reserved: raster order
    Rng rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    return perm;
}

std::vector<std::size_t> invert_permutation(const std::vector<std::size_t>& perm) {
    std::vector<std::size_t> inv(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
    return inv;
}

MnistData permute_pixels(const MnistData& data, std::uint64_t seed) {
    const auto perm = make_permutation(data.pixels, seed);
    MnistData out;
    out.count = data.count;
    out.pixels = data.pixels;
    out.labels = data.labels;
    out.images.resize(data.images.size());
    for (std::size_t i = 0; i < data.count; ++i) {
        const float* src = data.images.data() + i * data.pixels;
        float* dst = out.images.data() + i * data.pixels;
        for (std::size_t k = 0; k < data.pixels; ++k) dst[k] = src[perm[k]];
    }
    return out;
}

SplitIndices validation_split(std::size_t count, std::size_t k, std::uint64_t seed) {
    if (k >= count) throw std::invalid_argument("validation_split: k < N required");
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    SplitIndices out;
    out.train.assign(idx.begin(), idx.end() - static_cast<std::ptrdiff_t>(k));
    out.validation.assign(idx.end() - static_cast<std::ptrdiff_t>(k), idx.end());
    return out;
}

void write_jsonl(const std::string& path, const nlohmann::json& header,
                 const std::vector<TaskSample>& samples) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << header.dump() << '\n';
    for (const auto& s : samples) {
        nlohmann::json j{{"input", s.input}};
        if (!s.target.empty()) j["target"] = s.target;
        if (s.label >= 0) j["class"] = s.label;
        out << j.dump() << '\n';
    }
}

std::pair<nlohmann::json, std::vector<TaskSample>> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("jsonl: missing header line");
    nlohmann::json header = nlohmann::json::parse(line);
    std::vector<TaskSample> samples;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        TaskSample s;
        j.at("input").get_to(s.input);
        if (j.contains("target")) j.at("target").get_to(s.target);
        if (j.contains("class")) s.label = j.at("class").get<int>();
        samples.push_back(std::move(s));
    }
    return {std::move(header), std::move(samples)};
}

}  // namespace seprank
