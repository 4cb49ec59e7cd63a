// Dataset generation and loading: the two-moons generator's geometry and
// determinism, the CSV loader's parse diagnostics, and the IDX (MNIST
// container) reader against synthesized files.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "fracact/dataset.hpp"
#include "fracact/io.hpp"

using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() /
                     ("fracact-test-" + std::to_string(::getpid()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path file(const std::string& name) const { return path / name; }
};

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

void append_be_u32(std::string& buf, std::uint32_t v) {
    buf.push_back(static_cast<char>((v >> 24) & 0xff));
    buf.push_back(static_cast<char>((v >> 16) & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
    buf.push_back(static_cast<char>(v & 0xff));
}

void write_idx_pair(const fs::path& images, const fs::path& labels,
                    std::uint32_t n, std::uint32_t rows, std::uint32_t cols,
                    const std::vector<unsigned char>& pixels,
                    const std::vector<unsigned char>& labs,
                    std::uint32_t img_magic = 0x00000803u,
                    std::uint32_t lab_magic = 0x00000801u,
                    std::uint32_t label_count_override = 0) {
    std::string ib;
    append_be_u32(ib, img_magic);
    append_be_u32(ib, n);
    append_be_u32(ib, rows);
    append_be_u32(ib, cols);
    ib.append(pixels.begin(), pixels.end());
    std::ofstream(images, std::ios::binary) << ib;

    std::string lb;
    append_be_u32(lb, lab_magic);
    append_be_u32(lb, label_count_override ? label_count_override : n);
    lb.append(labs.begin(), labs.end());
    std::ofstream(labels, std::ios::binary) << lb;
}

} // namespace

TEST_CASE("two moons with zero noise lie on the two circles", "[dataset]") {
    const auto split = fracact::gen_two_moons(200, 0.0, 3);
    CHECK(split.train.size() == 160);
    CHECK(split.test.size() == 40);
    CHECK(split.train.dims() == 2);
    CHECK(split.train.split == "train");
    CHECK(split.test.split == "test");

    std::size_t class0 = 0;
    for (const fracact::Dataset* d : {&split.train, &split.test}) {
        for (std::size_t i = 0; i < d->size(); ++i) {
            const double x = d->features(i, 0);
            const double y = d->features(i, 1);
            if (d->labels[i] == 0) {
                ++class0;
                CHECK_THAT(std::hypot(x, y), WithinAbs(1.0, 1e-12));
                CHECK(y >= -1e-12); // upper half circle
            } else {
                REQUIRE(d->labels[i] == 1);
                CHECK_THAT(std::hypot(x - 1.0, y - 0.5), WithinAbs(1.0, 1e-12));
                CHECK(y <= 0.5 + 1e-12); // lower half circle
            }
        }
    }
    CHECK(class0 == 100); // balanced classes across the whole split
    CHECK(split.train.num_classes() == 2);
}

TEST_CASE("two moons generation is deterministic in the seed", "[dataset]") {
    const auto a = fracact::gen_two_moons(120, 0.25, 42);
    const auto b = fracact::gen_two_moons(120, 0.25, 42);
    CHECK(a.train.features.data() == b.train.features.data());
    CHECK(a.train.labels == b.train.labels);
    CHECK(a.test.features.data() == b.test.features.data());
    CHECK(a.test.labels == b.test.labels);

    const auto c = fracact::gen_two_moons(120, 0.25, 43);
    CHECK(a.train.features.data() != c.train.features.data());
}

TEST_CASE("two moons rejects bad arguments", "[dataset]") {
    CHECK_THROWS_AS(fracact::gen_two_moons(0, 0.1, 1), fracact::DomainError);
    CHECK_THROWS_AS(fracact::gen_two_moons(101, 0.1, 1), fracact::DomainError);
    CHECK_THROWS_AS(fracact::gen_two_moons(100, -0.1, 1), fracact::DomainError);
}

TEST_CASE("csv loader reads numeric rows with a label column", "[dataset]") {
    TempDir tmp;
    const auto p = tmp.file("data.csv");
    write_file(p, "0.5,1.5,0\n-1.25,2.0,1\n3.5, 4.5 ,0\n");
    const auto d = fracact::load_csv_dataset(p.string(), 2);
    REQUIRE(d.size() == 3);
    REQUIRE(d.dims() == 2);
    CHECK(d.features(0, 0) == 0.5);
    CHECK(d.features(0, 1) == 1.5);
    CHECK(d.features(1, 0) == -1.25);
    CHECK(d.features(2, 1) == 4.5); // surrounding spaces tolerated
    CHECK(d.labels == std::vector<int>{0, 1, 0});
    CHECK(d.num_classes() == 2);
}

TEST_CASE("csv loader honours header and label column position", "[dataset]") {
    TempDir tmp;
    const auto p = tmp.file("headed.csv");
    write_file(p, "label,f1,f2\n1,0.25,0.75\n0,0.5,0.125\n");
    const auto d = fracact::load_csv_dataset(p.string(), 0, /*has_header=*/true);
    REQUIRE(d.size() == 2);
    REQUIRE(d.dims() == 2);
    CHECK(d.labels == std::vector<int>{1, 0});
    CHECK(d.features(0, 0) == 0.25);
    CHECK(d.features(1, 1) == 0.125);

    // Windows line endings are stripped.
    const auto q = tmp.file("crlf.csv");
    write_file(q, "1.0,0\r\n2.0,1\r\n");
    const auto e = fracact::load_csv_dataset(q.string(), 1);
    CHECK(e.size() == 2);
    CHECK(e.features(1, 0) == 2.0);
}

TEST_CASE("csv loader names the failing row and column", "[dataset]") {
    TempDir tmp;
    const auto p = tmp.file("bad.csv");
    write_file(p, "1.0,2.0,0\n1.0,oops,1\n");
    CHECK_THROWS_WITH(fracact::load_csv_dataset(p.string(), 2),
                      ContainsSubstring("row 2") && ContainsSubstring("column 2"));

    const auto ragged = tmp.file("ragged.csv");
    write_file(ragged, "1.0,2.0,0\n1.0,1\n");
    CHECK_THROWS_WITH(fracact::load_csv_dataset(ragged.string(), 2),
                      ContainsSubstring("row 2"));

    const auto empty = tmp.file("empty.csv");
    write_file(empty, "");
    CHECK_THROWS_AS(fracact::load_csv_dataset(empty.string(), 0),
                    fracact::ParseError);

    const auto fraclab = tmp.file("fraclab.csv");
    write_file(fraclab, "1.0,0.5\n");
    CHECK_THROWS_WITH(fracact::load_csv_dataset(fraclab.string(), 1),
                      ContainsSubstring("not a non-negative integer"));

    const auto neglab = tmp.file("neglab.csv");
    write_file(neglab, "1.0,-1\n");
    CHECK_THROWS_AS(fracact::load_csv_dataset(neglab.string(), 1),
                    fracact::ParseError);

    write_file(tmp.file("okay.csv"), "1.0,2.0,0\n");
    CHECK_THROWS_WITH(fracact::load_csv_dataset(tmp.file("okay.csv").string(), 7),
                      ContainsSubstring("label column 7"));

    CHECK_THROWS_AS(fracact::load_csv_dataset((tmp.path / "missing.csv").string(), 0),
                    fracact::ParseError);
}

TEST_CASE("idx loader reads a synthesized image/label pair", "[dataset]") {
    TempDir tmp;
    const auto imgs = tmp.file("imgs.idx");
    const auto labs = tmp.file("labs.idx");
    // Three 2x2 images with recognizable corner pixels.
    const std::vector<unsigned char> pixels = {
        255, 0, 0, 0,     // image 0
        0, 128, 0, 0,     // image 1
        0, 0, 0, 51,      // image 2
    };
    write_idx_pair(imgs, labs, 3, 2, 2, pixels, {7, 0, 9});

    const auto d = fracact::load_idx_images(imgs.string(), labs.string());
    REQUIRE(d.size() == 3);
    REQUIRE(d.dims() == 4);
    CHECK(d.features(0, 0) == 1.0);         // 255 scales to exactly 1
    CHECK(d.features(0, 1) == 0.0);
    CHECK_THAT(d.features(1, 1), WithinAbs(128.0 / 255.0, 1e-15));
    CHECK_THAT(d.features(2, 3), WithinAbs(0.2, 1e-15));
    CHECK(d.labels == std::vector<int>{7, 0, 9});

    // The limit keeps only the leading examples.
    const auto first2 = fracact::load_idx_images(imgs.string(), labs.string(), 2);
    CHECK(first2.size() == 2);
    CHECK(first2.labels == std::vector<int>{7, 0});
}

TEST_CASE("idx loader rejects malformed containers", "[dataset]") {
    TempDir tmp;
    const auto imgs = tmp.file("imgs.idx");
    const auto labs = tmp.file("labs.idx");
    const std::vector<unsigned char> pixels(8, 0);

    write_idx_pair(imgs, labs, 2, 2, 2, pixels, {1, 0}, /*img_magic=*/0x123u);
    CHECK_THROWS_WITH(fracact::load_idx_images(imgs.string(), labs.string()),
                      ContainsSubstring("bad image magic"));

    write_idx_pair(imgs, labs, 2, 2, 2, pixels, {1, 0}, 0x803u, /*lab_magic=*/0x55u);
    CHECK_THROWS_WITH(fracact::load_idx_images(imgs.string(), labs.string()),
                      ContainsSubstring("bad label magic"));

    // Image/label count mismatch.
    write_idx_pair(imgs, labs, 2, 2, 2, pixels, {1, 0}, 0x803u, 0x801u,
                   /*label_count_override=*/5);
    CHECK_THROWS_WITH(fracact::load_idx_images(imgs.string(), labs.string()),
                      ContainsSubstring("does not match label count"));

    // Truncated pixel data: header promises 2 images, body holds 1.5.
    write_idx_pair(imgs, labs, 2, 2, 2, std::vector<unsigned char>(6, 0), {1, 0});
    CHECK_THROWS_WITH(fracact::load_idx_images(imgs.string(), labs.string()),
                      ContainsSubstring("truncated image data"));

    CHECK_THROWS_AS(fracact::load_idx_images((tmp.path / "nope.idx").string(),
                                             labs.string()),
                    fracact::FormatError);
}
