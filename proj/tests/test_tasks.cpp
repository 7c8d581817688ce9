#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "seprank/tasks.hpp"

using namespace seprank;

namespace {

std::filesystem::path tmp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "seprank_task_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> gzip_bytes(const std::vector<unsigned char>& raw) {
    z_stream strm{};
    deflateInit2(&strm, Z_BEST_SPEED, Z_DEFLATED, 16 + MAX_WBITS, 8, Z_DEFAULT_STRATEGY);
    std::vector<unsigned char> out(raw.size() + 1024);
    strm.next_in = const_cast<unsigned char*>(raw.data());
    strm.avail_in = static_cast<unsigned>(raw.size());
    strm.next_out = out.data();
    strm.avail_out = static_cast<unsigned>(out.size());
    deflate(&strm, Z_FINISH);
    out.resize(out.size() - strm.avail_out);
    deflateEnd(&strm);
    return out;
}

// Small synthetic IDX pair: count images of side x side ramp pixels.
std::pair<std::vector<unsigned char>, std::vector<unsigned char>> synth_idx(std::size_t count,
                                                                            std::size_t side) {
    std::vector<unsigned char> img{0, 0, 8, 3};
    auto push32 = [](std::vector<unsigned char>& v, std::uint32_t x) {
        v.push_back(static_cast<unsigned char>(x >> 24));
        v.push_back(static_cast<unsigned char>(x >> 16));
        v.push_back(static_cast<unsigned char>(x >> 8));
        v.push_back(static_cast<unsigned char>(x));
    };
    push32(img, static_cast<std::uint32_t>(count));
    push32(img, static_cast<std::uint32_t>(side));
    push32(img, static_cast<std::uint32_t>(side));
    for (std::size_t i = 0; i < count * side * side; ++i)
        img.push_back(static_cast<unsigned char>(i % 251));
    std::vector<unsigned char> lbl{0, 0, 8, 1};
    push32(lbl, static_cast<std::uint32_t>(count));
    for (std::size_t i = 0; i < count; ++i) lbl.push_back(static_cast<unsigned char>(i % 10));
    return {img, lbl};
}

}  // namespace

TEST_CASE("copy task layout matches the worked example") {
    CopyConfig cfg{3, 5, 8};
    Rng rng(1);
    TaskSample s = gen_copy(cfg, rng);
    const Vocabulary vocab{8};
    REQUIRE(s.input.size() == 11);  // T = B + 2m
    REQUIRE(s.target.size() == 11);
    // Data prefix, blanks, trigger at position m+B+1, trailing blanks.
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(s.input[i] >= 1);
        CHECK(s.input[i] <= 8);
    }
    for (std::size_t i = 3; i < 8; ++i) CHECK(s.input[i] == vocab.blank_id());
    CHECK(s.input[8] == vocab.trigger_id());
    for (std::size_t i = 9; i < 11; ++i) CHECK(s.input[i] == vocab.blank_id());
    // Target: blanks except the final m positions replaying the data.
    for (std::size_t i = 0; i < 8; ++i) CHECK(s.target[i] == vocab.blank_id());
    for (std::size_t i = 0; i < 3; ++i) CHECK(s.target[8 + i] == s.input[i]);
}

TEST_CASE("copy task boundary B=0, m=1") {
    CopyConfig cfg{1, 0, 4};
    Rng rng(2);
    TaskSample s = gen_copy(cfg, rng);
    const Vocabulary vocab{4};
    REQUIRE(s.input.size() == 2);
    CHECK(s.input[0] >= 1);
    CHECK(s.input[0] <= 4);
    CHECK(s.input[1] == vocab.trigger_id());
    CHECK(s.target[0] == vocab.blank_id());
    CHECK(s.target[1] == s.input[0]);
}

TEST_CASE("copy task structural invariants over random configs") {
    Rng rng(3);
    std::uniform_int_distribution<std::size_t> md(1, 6), bd(0, 10), nd(2, 9);
    for (int trial = 0; trial < 50; ++trial) {
        CopyConfig cfg{md(rng), bd(rng), nd(rng)};
        TaskSample s = gen_copy(cfg, rng);
        const Vocabulary vocab{cfg.n};
        CHECK(s.input.size() == cfg.b + 2 * cfg.m);
        std::size_t data = 0, triggers = 0;
        for (std::size_t i = 0; i < s.input.size(); ++i) {
            if (s.input[i] == vocab.trigger_id()) {
                ++triggers;
                CHECK(i == cfg.m + cfg.b);  // position m+B+1, 1-based
            } else if (s.input[i] != vocab.blank_id()) {
                ++data;
                CHECK(i < cfg.m);
            }
        }
        CHECK(data == cfg.m);
        CHECK(triggers == 1);
        for (std::size_t i = 0; i + cfg.m < s.target.size(); ++i)
            CHECK(s.target[i] == vocab.blank_id());
    }
}

TEST_CASE("data accuracy") {
    const std::size_t m = 4, b = 2;
    const Vocabulary vocab{5};
    Rng rng(4);
    CopyConfig cfg{m, b, 5};
    TaskSample s = gen_copy(cfg, rng);
    // Perfect predictions.
    CHECK(data_accuracy({s.target}, {s.target}, m, b) == 1.0);
    // All-blank predictions never hit data characters.
    std::vector<std::size_t> blanks(s.target.size(), vocab.blank_id());
    CHECK(data_accuracy({blanks}, {s.target}, m, b) == 0.0);
    // One wrong character out of m = 4 over a single sample.
    auto one_wrong = s.target;
    one_wrong[s.target.size() - 1] = s.target.back() % 5 + 1 == s.target.back()
                                         ? s.target.back() - 1
                                         : s.target.back() % 5 + 1;
    CHECK(data_accuracy({one_wrong}, {s.target}, m, b) == doctest::Approx(0.75));
    // Predictions outside the scoring window are ignored.
    auto scrambled = s.target;
    for (std::size_t i = 0; i + m < scrambled.size(); ++i) scrambled[i] = 1;
    CHECK(data_accuracy({scrambled}, {s.target}, m, b) == 1.0);
}

TEST_CASE("similarity task examples and structure") {
    SimConfig cfg{20, 4, 8};
    Rng rng(5);
    const Vocabulary vocab{8};
    std::array<std::size_t, 3> histogram{0, 0, 0};
    for (int trial = 0; trial < 3000; ++trial) {
        TaskSample s = gen_sim(cfg, rng);
        REQUIRE(s.input.size() == 20);
        REQUIRE(s.label >= 0);
        REQUIRE(s.label <= 2);
        ++histogram[static_cast<std::size_t>(s.label)];
        // Find the substring: contiguous m alphabetic tokens in each half.
        std::size_t start = 0;
        while (start < 10 && s.input[start] == vocab.blank_id()) ++start;
        REQUIRE(start + cfg.m <= 10);  // s1 fits inside the first half
        std::size_t matches = 0;
        for (std::size_t i = 0; i < cfg.m; ++i) {
            const std::size_t a = s.input[start + i];
            const std::size_t bsym = s.input[start + 10 + i];
            CHECK(a >= 1);
            CHECK(a <= 8);
            CHECK(bsym >= 1);
            CHECK(bsym <= 8);
            if (a == bsym) ++matches;
        }
        // Aligned-match count is exactly m, m/2, or 0 per class.
        if (s.label == kSimClassFull) CHECK(matches == cfg.m);
        if (s.label == kSimClassHalf) CHECK(matches == cfg.m / 2);
        if (s.label == kSimClassZero) CHECK(matches == 0);
        // Everything else is blank.
        for (std::size_t i = 0; i < 20; ++i) {
            const bool in_s1 = i >= start && i < start + cfg.m;
            const bool in_s2 = i >= start + 10 && i < start + 10 + cfg.m;
            if (!in_s1 && !in_s2) CHECK(s.input[i] == vocab.blank_id());
        }
    }
    // Uniform class draw within +-5%.
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(histogram[c] > 1000 - 150);
        CHECK(histogram[c] < 1000 + 150);
    }
}

TEST_CASE("similarity worked examples classify by aligned matches") {
    // "___ABBA______ABBA___" is fully similar; "___ABBA______BAAB___" has no
    // aligned match. Tokens: A=1, B=2, blank=n+1.
    const SimConfig cfg{20, 4, 8};
    auto aligned_matches = [&](const std::string& s) {
        std::size_t matches = 0;
        for (std::size_t i = 0; i < cfg.t / 2; ++i) {
            if (s[i] != '_' && s[i] == s[i + cfg.t / 2]) ++matches;
        }
        return matches;
    };
    CHECK(aligned_matches("___ABBA______ABBA___") == cfg.m);  // 1-similar
    CHECK(aligned_matches("___ABBA______BAAB___") == 0);      // 0-similar

    // The generator reproduces exactly these match counts per class.
    Rng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        TaskSample s = gen_sim(cfg, rng);
        std::size_t matches = 0;
        const Vocabulary vocab{cfg.n};
        for (std::size_t i = 0; i < cfg.t / 2; ++i) {
            if (s.input[i] != vocab.blank_id() && s.input[i] == s.input[i + cfg.t / 2]) ++matches;
        }
        const std::size_t want = s.label == kSimClassFull ? cfg.m
                                 : s.label == kSimClassHalf ? cfg.m / 2
                                                            : 0;
        CHECK(matches == want);
    }
}

TEST_CASE("similarity config validation") {
    CHECK_THROWS_AS((SimConfig{10, 5, 4}).validate(), std::invalid_argument);  // odd m
    CHECK_THROWS_AS((SimConfig{10, 6, 4}).validate(), std::invalid_argument);  // m >= T/2
    CHECK_THROWS_AS((SimConfig{11, 4, 4}).validate(), std::invalid_argument);  // odd T
    CHECK_THROWS_AS((SimConfig{20, 4, 1}).validate(), std::invalid_argument);  // n < 2
}

TEST_CASE("bits memorized") {
    CHECK(bits_memorized(10, 8) == doctest::Approx(30.0));
    CHECK(bits_memorized(30, 32) == doctest::Approx(150.0));
    CHECK(bits_memorized(17, 2) == doctest::Approx(17.0));
    CHECK_THROWS_AS(bits_memorized(5, 1), std::invalid_argument);
}

TEST_CASE("idx loader round trip, raw and gzip") {
    auto dir = tmp_dir();
    auto [img, lbl] = synth_idx(20, 7);
    write_bytes(dir / "img_raw", img);
    write_bytes(dir / "lbl_raw", lbl);
    write_bytes(dir / "img_gz", gzip_bytes(img));
    write_bytes(dir / "lbl_gz", gzip_bytes(lbl));

    MnistData raw = load_mnist_idx((dir / "img_raw").string(), (dir / "lbl_raw").string());
    CHECK(raw.count == 20);
    CHECK(raw.pixels == 49);
    CHECK(raw.images.size() == 20 * 49);
    CHECK(raw.images[3] == doctest::Approx(3.0f / 255.0f));
    for (int v : raw.labels) {
        CHECK(v >= 0);
        CHECK(v <= 9);
    }

    MnistData gz = load_mnist_idx((dir / "img_gz").string(), (dir / "lbl_gz").string());
    CHECK(gz.images == raw.images);
    CHECK(gz.labels == raw.labels);

    // Writing back and reloading reproduces the data exactly.
    write_mnist_idx((dir / "img_back").string(), (dir / "lbl_back").string(), raw);
    MnistData back = load_mnist_idx((dir / "img_back").string(), (dir / "lbl_back").string());
    CHECK(back.images == raw.images);
    CHECK(back.labels == raw.labels);
}

TEST_CASE("idx loader error paths") {
    auto dir = tmp_dir();
    auto [img, lbl] = synth_idx(5, 4);

    auto bad_magic = img;
    bad_magic[3] = 9;
    write_bytes(dir / "bad_magic", bad_magic);
    write_bytes(dir / "lbl_ok", lbl);
    CHECK_THROWS_WITH_AS(load_mnist_idx((dir / "bad_magic").string(), (dir / "lbl_ok").string()),
                         doctest::Contains("magic"), std::runtime_error);

    auto truncated = img;
    truncated.resize(truncated.size() - 3);
    write_bytes(dir / "trunc", truncated);
    CHECK_THROWS_WITH_AS(load_mnist_idx((dir / "trunc").string(), (dir / "lbl_ok").string()),
                         doctest::Contains("truncated"), std::runtime_error);

    auto [img2, lbl2] = synth_idx(6, 4);
    write_bytes(dir / "img6", img2);
    CHECK_THROWS_WITH_AS(load_mnist_idx((dir / "img6").string(), (dir / "lbl_ok").string()),
                         doctest::Contains("mismatch"), std::runtime_error);
}

TEST_CASE("pixel permutation") {
    // Determinism and bijectivity per seed.
    for (std::uint64_t seed : {std::uint64_t{1}, std::uint64_t{7}, std::uint64_t{42}}) {
        auto p1 = make_permutation(784, seed);
        auto p2 = make_permutation(784, seed);
        CHECK(p1 == p2);
        std::vector<bool> seen(784, false);
        for (std::size_t v : p1) {
            CHECK(v < 784);
            CHECK(!seen[v]);
            seen[v] = true;
        }
    }
    // Seed 0 is the identity convention.
    auto ident = make_permutation(10, 0);
    for (std::size_t i = 0; i < 10; ++i) CHECK(ident[i] == i);

    // Applying the inverse permutation recovers the original images.
    auto [img, lbl] = synth_idx(4, 5);
    auto dir = tmp_dir();
    write_bytes(dir / "pimg", img);
    write_bytes(dir / "plbl", lbl);
    MnistData data = load_mnist_idx((dir / "pimg").string(), (dir / "plbl").string());
    MnistData shuffled = permute_pixels(data, 99);
    CHECK(shuffled.images != data.images);
    const auto perm = make_permutation(data.pixels, 99);
    const auto inv = invert_permutation(perm);
    MnistData restored = shuffled;
    for (std::size_t i = 0; i < data.count; ++i)
        for (std::size_t k = 0; k < data.pixels; ++k)
            restored.images[i * data.pixels + k] =
                shuffled.images[i * data.pixels + inv[k]];
    CHECK(restored.images == data.images);
}

TEST_CASE("validation split") {
    SplitIndices s = validation_split(60000, 5000, 7);
    CHECK(s.train.size() == 55000);
    CHECK(s.validation.size() == 5000);
    SplitIndices again = validation_split(60000, 5000, 7);
    CHECK(s.train == again.train);
    CHECK(s.validation == again.validation);
    SplitIndices empty = validation_split(100, 0, 7);
    CHECK(empty.validation.empty());
    CHECK(empty.train.size() == 100);
    CHECK_THROWS_AS(validation_split(10, 10, 7), std::invalid_argument);
}

TEST_CASE("jsonl round trip") {
    auto dir = tmp_dir();
    const auto path = (dir / "dataset.jsonl").string();
    Rng rng(6);
    CopyConfig ccfg{2, 1, 4};
    SimConfig scfg{8, 2, 4};
    std::vector<TaskSample> samples;
    for (int i = 0; i < 5; ++i) samples.push_back(gen_copy(ccfg, rng));
    for (int i = 0; i < 5; ++i) samples.push_back(gen_sim(scfg, rng));
    nlohmann::json header{{"seed", 6}, {"task", "mixed"}};
    write_jsonl(path, header, samples);
    auto [header_back, back] = read_jsonl(path);
    CHECK(header_back.at("seed") == 6);
    REQUIRE(back.size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(back[i].input == samples[i].input);
        CHECK(back[i].target == samples[i].target);
        CHECK(back[i].label == samples[i].label);
    }
}
