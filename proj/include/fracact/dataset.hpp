#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fracact/errors.hpp"
#include "fracact/rng.hpp"
#include "fracact/tensor.hpp"

namespace fracact {

/// Feature rows with integer class labels and a split tag.
struct Dataset {
    Tensor features; // rows x dims
    std::vector<int> labels;
    std::string split; // "train" / "test" / ""

    std::size_t size() const { return labels.size(); }
    std::size_t dims() const { return features.cols(); }

    int num_classes() const {
        int m = 0;
        for (int l : labels) m = std::max(m, l + 1);
        return m;
    }
};

struct DataSplit {
    Dataset train;
    Dataset test;
};

namespace detail {

inline Dataset take_rows(const Tensor& features, const std::vector<int>& labels,
                         const std::vector<std::size_t>& order,
                         std::size_t begin, std::size_t end,
                         const std::string& split) {
    Dataset d;
    d.split = split;
    d.features = Tensor::matrix(end - begin, features.cols());
    d.labels.reserve(end - begin);
    for (std::size_t r = begin; r < end; ++r) {
        const std::size_t src = order[r];
        for (std::size_t c = 0; c < features.cols(); ++c)
            d.features(r - begin, c) = features(src, c);
        d.labels.push_back(labels[src]);
    }
    return d;
}

} // namespace detail

/// Two interleaving half-circles, n/2 points per class, Gaussian noise of
/// the given standard deviation, 80/20 train/test split by seeded
/// permutation. With noise 0 class 0 lies on the unit circle around
/// (0, 0) and class 1 on the unit circle around (1, 0.5).
inline DataSplit gen_two_moons(std::size_t n, double noise, std::uint64_t seed) {
    if (n < 2 || n % 2 != 0)
        throw DomainError("gen_two_moons: n must be even and >= 2");
    if (noise < 0.0)
        throw DomainError("gen_two_moons: noise must be >= 0");
    const std::size_t half = n / 2;
    Tensor features = Tensor::matrix(n, 2);
    std::vector<int> labels(n);
    Rng rng(seed);
    for (std::size_t i = 0; i < half; ++i) {
        const double t = half > 1 ? M_PI * static_cast<double>(i) /
                                        static_cast<double>(half - 1)
                                  : 0.0;
        features(i, 0) = std::cos(t);
        features(i, 1) = std::sin(t);
        labels[i] = 0;
        features(half + i, 0) = 1.0 - std::cos(t);
        features(half + i, 1) = 0.5 - std::sin(t);
        labels[half + i] = 1;
    }
    if (noise > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            features(i, 0) += noise * rng.normal();
            features(i, 1) += noise * rng.normal();
        }
    }
    const std::vector<std::size_t> order = rng.permutation(n);
    const std::size_t n_train = n * 8 / 10;
    DataSplit split;
    split.train = detail::take_rows(features, labels, order, 0, n_train, "train");
    split.test = detail::take_rows(features, labels, order, n_train, n, "test");
    return split;
}

/// Numeric CSV with one label column; parse failures name the 1-based row
/// and column.
inline Dataset load_csv_dataset(const std::string& path, std::size_t label_column,
                                bool has_header = false) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("load_csv_dataset: cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    bool skipped_header = !has_header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!skipped_header) {
            skipped_header = true;
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            ++col;
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
                    ++used;
                if (used != cell.size()) throw std::invalid_argument(cell);
                row.push_back(v);
            } catch (const std::exception&) {
                throw ParseError("load_csv_dataset: non-numeric cell at row " +
                                 std::to_string(line_no) + ", column " +
                                 std::to_string(col));
            }
        }
        if (width == 0) width = row.size();
        if (row.size() != width)
            throw ParseError("load_csv_dataset: row " + std::to_string(line_no) +
                             " has " + std::to_string(row.size()) +
                             " fields, expected " + std::to_string(width));
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw ParseError("load_csv_dataset: no data rows in " + path);
    if (label_column >= width)
        throw ParseError("load_csv_dataset: label column " +
                         std::to_string(label_column) + " out of range (width " +
                         std::to_string(width) + ")");
    Dataset d;
    d.features = Tensor::matrix(rows.size(), width - 1);
    d.labels.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::size_t out = 0;
        for (std::size_t c = 0; c < width; ++c) {
            if (c == label_column) continue;
            d.features(r, out++) = rows[r][c];
        }
        const double lv = rows[r][label_column];
        const int label = static_cast<int>(std::llround(lv));
        if (label < 0 || std::abs(lv - label) > 1e-9)
            throw ParseError("load_csv_dataset: label at row " +
                             std::to_string(r + 1 + (has_header ? 1 : 0)) +
                             " is not a non-negative integer");
        d.labels.push_back(label);
    }
    return d;
}

namespace detail {

inline std::uint32_t read_be_u32(std::istream& in, const std::string& what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw FormatError("load_idx: truncated file while reading " + what);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

} // namespace detail

/// IDX image/label pair (the MNIST container format). Pixels are scaled
/// to [0, 1]; `limit` keeps only the first examples.
inline Dataset load_idx_images(const std::string& images_path,
                               const std::string& labels_path,
                               std::optional<std::size_t> limit = std::nullopt) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs)
        throw FormatError("load_idx_images: cannot open " + images_path);
    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs)
        throw FormatError("load_idx_images: cannot open " + labels_path);

    const std::uint32_t img_magic = detail::read_be_u32(imgs, "image magic");
    if (img_magic != 0x00000803u)
        throw FormatError("load_idx_images: bad image magic 0x" +
                          [&] { std::ostringstream os; os << std::hex << img_magic; return os.str(); }());
    const std::uint32_t lab_magic = detail::read_be_u32(labs, "label magic");
    if (lab_magic != 0x00000801u)
        throw FormatError("load_idx_images: bad label magic 0x" +
                          [&] { std::ostringstream os; os << std::hex << lab_magic; return os.str(); }());

    const std::uint32_t n_images = detail::read_be_u32(imgs, "image count");
    const std::uint32_t rows = detail::read_be_u32(imgs, "image rows");
    const std::uint32_t cols = detail::read_be_u32(imgs, "image cols");
    const std::uint32_t n_labels = detail::read_be_u32(labs, "label count");
    if (n_images != n_labels)
        throw FormatError("load_idx_images: image count " + std::to_string(n_images) +
                          " does not match label count " + std::to_string(n_labels));

    std::size_t take = n_images;
    if (limit) take = std::min<std::size_t>(*limit, take);
    const std::size_t pixels = std::size_t(rows) * cols;

    Dataset d;
    d.features = Tensor::matrix(take, pixels);
    d.labels.resize(take);
    std::vector<unsigned char> buf(pixels);
    for (std::size_t i = 0; i < take; ++i) {
        if (!imgs.read(reinterpret_cast<char*>(buf.data()),
                       static_cast<std::streamsize>(pixels)))
            throw FormatError("load_idx_images: truncated image data at index " +
                              std::to_string(i));
        for (std::size_t p = 0; p < pixels; ++p)
            d.features(i, p) = buf[p] / 255.0;
        char lab = 0;
        if (!labs.read(&lab, 1))
            throw FormatError("load_idx_images: truncated label data at index " +
                              std::to_string(i));
        d.labels[i] = static_cast<unsigned char>(lab);
    }
    return d;
}

} // namespace fracact
