#pragma once

#include "efdls/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace efdls {

// One row of the 44-dataset selection table.
struct DatasetMeta {
    std::string_view table_name;    // name as printed in the table
    std::string_view archive_name;  // <Name> in <Name>_TRAIN.tsv
    std::size_t train = 0;
    std::size_t test = 0;
    std::size_t classes = 0;
    std::optional<std::size_t> length;  // nullopt for variable-length sets
    std::string_view type;
};

std::span<const DatasetMeta> dataset_registry();
// Matches either the table name or the archive name.
const DatasetMeta* find_dataset_meta(std::string_view name);

struct TimeSeriesDataset {
    std::string name;
    Tensor train_x;  // [N_train, L]
    std::vector<std::size_t> train_y;
    Tensor test_x;   // [N_test, L]
    std::vector<std::size_t> test_y;
    std::size_t num_classes = 0;
    std::size_t series_length = 0;
    std::vector<double> label_map;       // original label of each class index
    std::vector<std::string> meta_mismatches;
};

struct LoadOptions {
    bool znormalize = true;
};

struct RawSplit {
    std::vector<double> labels;
    std::vector<std::vector<double>> series;  // trailing NaNs stripped
    bool widths_differ = false;                // rows had different column counts
    bool has_missing = false;                  // NaN values were present
};

// Parses one UCR TSV file: label, then tab-separated values.
RawSplit parse_ucr_tsv(const std::filesystem::path& file);

// Loads <dir>/<name>_TRAIN.tsv and <dir>/<name>_TEST.tsv. Labels are remapped
// to 0..C-1 in sorted order of the original values; series are z-normalized per
// instance, then right-padded with zeros to the longest series of both splits.
TimeSeriesDataset load_ucr_dataset(const std::filesystem::path& dir, const std::string& name,
                                   const LoadOptions& options = {},
                                   const DatasetMeta* meta = nullptr);

// Mean 0 / std 1; series with zero variance become all zeros.
std::vector<double> z_normalize(std::span<const double> series);
std::vector<double> pad_to_length(std::span<const double> series, std::size_t target);

// Gathers rows of an [N, L] matrix into a model batch [B, 1, L].
Tensor gather_batch(const Tensor& rows, std::span<const std::size_t> indices);
std::vector<std::size_t> gather_labels(std::span<const std::size_t> labels,
                                       std::span<const std::size_t> indices);

// Synthetic data for tests and demos.
struct SyntheticSpec {
    std::string name = "Synthetic";
    std::size_t train = 20;
    std::size_t test = 20;
    std::size_t classes = 2;
    std::size_t length = 64;
    double noise = 0.1;
    std::uint64_t seed = 0;
};

// Two classes: a sine wave with random phase (class 0) versus a flat line (class 1).
TimeSeriesDataset make_sine_vs_flat(const SyntheticSpec& spec);
// `classes` classes, class c a sinusoid of frequency c + 1 with random phase.
TimeSeriesDataset make_synthetic_dataset(const SyntheticSpec& spec);

// Stand-ins for Chinatown, ECG200, SonyAIBORobotSurface1 and CBF: same split
// sizes, class counts and lengths, synthetic content.
std::vector<SyntheticSpec> smoke_standin_specs();

// Writes the dataset as <dir>/<name>_TRAIN.tsv and _TEST.tsv (labels written as class indices + 1).
void write_ucr_tsv(const TimeSeriesDataset& dataset, const std::filesystem::path& dir);

}  // namespace efdls
