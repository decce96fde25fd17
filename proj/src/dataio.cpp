#include "efdls/dataio.hpp"

#include "efdls/errors.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

namespace efdls {

namespace {

constexpr std::size_t kVary = 0;

struct Row {
    std::string_view table_name;
    std::string_view archive_name;
    std::size_t train, test, classes, length;
    std::string_view type;
};

constexpr std::array<Row, 44> kTable1{{
    {"Chinatown", "Chinatown", 20, 345, 2, 24, "Traffic"},
    {"MelbournePedestrian", "MelbournePedestrian", 1194, 2439, 10, 24, "Traffic"},
    {"SonyAIBORobotSur.2", "SonyAIBORobotSurface2", 27, 953, 2, 65, "Sensor"},
    {"SonyAIBORobotSur.1", "SonyAIBORobotSurface1", 20, 601, 2, 70, "Sensor"},
    {"DistalPhalanxO.A.G", "DistalPhalanxOutlineAgeGroup", 400, 139, 3, 80, "Image"},
    {"DistalPhalanxO.C.", "DistalPhalanxOutlineCorrect", 600, 276, 2, 80, "Image"},
    {"DistalPhalanxTW", "DistalPhalanxTW", 400, 139, 6, 80, "Image"},
    {"TwoLeadECG", "TwoLeadECG", 23, 1139, 2, 82, "ECG"},
    {"MoteStrain", "MoteStrain", 20, 1252, 2, 84, "Sensor"},
    {"ECG200", "ECG200", 100, 100, 2, 96, "ECG"},
    {"CBF", "CBF", 30, 900, 3, 128, "Simulated"},
    {"DodgerLoopDay", "DodgerLoopDay", 78, 80, 7, 288, "Sensor"},
    {"DodgerLoopGame", "DodgerLoopGame", 20, 138, 2, 288, "Sensor"},
    {"DodgerLoopWeekend", "DodgerLoopWeekend", 20, 138, 2, 288, "Sensor"},
    {"CricketX", "CricketX", 390, 390, 12, 300, "Motion"},
    {"CricketY", "CricketY", 390, 390, 12, 300, "Motion"},
    {"CricketZ", "CricketZ", 390, 390, 12, 300, "Motion"},
    {"FaceFour", "FaceFour", 24, 88, 4, 350, "Image"},
    {"Ham", "Ham", 109, 105, 2, 431, "Spectro"},
    {"Meat", "Meat", 60, 60, 3, 448, "Spectro"},
    {"Fish", "Fish", 175, 175, 7, 463, "Image"},
    {"Beef", "Beef", 30, 30, 5, 470, "Spectro"},
    {"OliveOil", "OliveOil", 30, 30, 4, 570, "Spectro"},
    {"Car", "Car", 60, 60, 4, 577, "Sensor"},
    {"Lightning2", "Lightning2", 60, 61, 2, 637, "Sensor"},
    {"Computers", "Computers", 250, 250, 2, 720, "Device"},
    {"Mallat", "Mallat", 55, 2345, 8, 1024, "Simulated"},
    {"Phoneme", "Phoneme", 214, 1896, 39, 1024, "Sensor"},
    {"StarLightCurves", "StarLightCurves", 1000, 8236, 3, 1024, "Sensor"},
    {"MixedShapesRegularT.", "MixedShapesRegularTrain", 500, 2425, 5, 1024, "Image"},
    {"MixedShapesSmallT.", "MixedShapesSmallTrain", 100, 2425, 5, 1024, "Image"},
    {"ACSF1", "ACSF1", 100, 100, 10, 1460, "Device"},
    {"SemgHandG.Ch2", "SemgHandGenderCh2", 300, 600, 2, 1500, "Spectrum"},
    {"AllGestureWiimoteX", "AllGestureWiimoteX", 300, 700, 10, kVary, "Sensor"},
    {"AllGestureWiimoteY", "AllGestureWiimoteY", 300, 700, 10, kVary, "Sensor"},
    {"AllGestureWiimoteZ", "AllGestureWiimoteZ", 300, 700, 10, kVary, "Sensor"},
    {"GestureMidAirD1", "GestureMidAirD1", 208, 130, 26, kVary, "Trajectory"},
    {"GestureMidAirD2", "GestureMidAirD2", 208, 130, 26, kVary, "Trajectory"},
    {"GestureMidAirD3", "GestureMidAirD3", 208, 130, 26, kVary, "Trajectory"},
    {"GesturePebbleZ1", "GesturePebbleZ1", 132, 172, 6, kVary, "Sensor"},
    {"GesturePebbleZ2", "GesturePebbleZ2", 146, 158, 6, kVary, "Sensor"},
    {"PickupGestureW.Z", "PickupGestureWiimoteZ", 50, 50, 10, kVary, "Sensor"},
    {"PLAID", "PLAID", 537, 537, 11, kVary, "Device"},
    {"ShakeGestureW.Z", "ShakeGestureWiimoteZ", 50, 50, 10, kVary, "Sensor"},
}};

const std::vector<DatasetMeta>& registry_storage() {
    static const std::vector<DatasetMeta> rows = [] {
        std::vector<DatasetMeta> out;
        for (const auto& r : kTable1) {
            out.push_back({r.table_name, r.archive_name, r.train, r.test, r.classes,
                           r.length == kVary ? std::nullopt : std::optional<std::size_t>(r.length), r.type});
        }
        return out;
    }();
    return rows;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\n')) s.remove_suffix(1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    return s;
}

double parse_field(std::string_view field, const std::filesystem::path& file, std::size_t line) {
    field = trim(field);
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (field.empty() || ec != std::errc() || ptr != last) {
        throw DatasetError(file.string() + ":" + std::to_string(line) + ": cannot parse value '" +
                           std::string(field) + "'");
    }
    return value;
}

// Normalizes over the observed values; interior gaps become 0 afterwards.
std::vector<double> prepare_row(const std::vector<double>& row, bool normalize) {
    std::vector<double> observed;
    observed.reserve(row.size());
    for (double v : row) {
        if (!std::isnan(v)) observed.push_back(v);
    }
    if (normalize) observed = z_normalize(observed);
    std::vector<double> out(row.size(), 0.0);
    std::size_t j = 0;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (!std::isnan(row[i])) out[i] = observed[j++];
    }
    return out;
}

}  // namespace

std::span<const DatasetMeta> dataset_registry() { return registry_storage(); }

const DatasetMeta* find_dataset_meta(std::string_view name) {
    for (const auto& m : registry_storage()) {
        if (m.table_name == name || m.archive_name == name) return &m;
    }
    return nullptr;
}

RawSplit parse_ucr_tsv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DatasetError("cannot open " + file.string());
    RawSplit split;
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::size_t> width;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty()) continue;
        std::vector<double> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t tab = view.find('\t', start);
            fields.push_back(parse_field(view.substr(start, tab - start), file, line_no));
            if (tab == std::string_view::npos) break;
            start = tab + 1;
        }
        if (fields.size() < 2) {
            throw DatasetError(file.string() + ":" + std::to_string(line_no) + ": row has no series values");
        }
        if (!std::isfinite(fields[0])) {
            throw DatasetError(file.string() + ":" + std::to_string(line_no) + ": label is not a finite number");
        }
        if (width && *width != fields.size()) split.widths_differ = true;
        if (!width) width = fields.size();

        // Trailing NaNs pad variable-length rows; interior NaNs are kept as gaps.
        std::size_t end = fields.size();
        while (end > 1 && std::isnan(fields[end - 1])) --end;
        if (end != fields.size()) split.has_missing = true;
        std::vector<double> series(fields.begin() + 1, fields.begin() + static_cast<std::ptrdiff_t>(end));
        if (std::any_of(series.begin(), series.end(), [](double v) { return std::isnan(v); })) {
            split.has_missing = true;
        }
        if (series.empty()) {
            throw DatasetError(file.string() + ":" + std::to_string(line_no) + ": row has only missing values");
        }
        split.labels.push_back(fields[0]);
        split.series.push_back(std::move(series));
    }
    if (split.series.empty()) throw DatasetError(file.string() + ": file is empty");
    return split;
}

std::vector<double> z_normalize(std::span<const double> series) {
    std::vector<double> out(series.size(), 0.0);
    if (series.empty()) return out;
    const double n = static_cast<double>(series.size());
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : series) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / n);
    if (!(sd > 1e-10 * std::max(1.0, std::abs(mean)))) return out;
    for (std::size_t i = 0; i < series.size(); ++i) out[i] = (series[i] - mean) / sd;
    return out;
}

std::vector<double> pad_to_length(std::span<const double> series, std::size_t target) {
    if (series.size() > target) {
        throw DimensionError("series of length " + std::to_string(series.size()) + " exceeds pad target " +
                             std::to_string(target));
    }
    std::vector<double> out(series.begin(), series.end());
    out.resize(target, 0.0);
    return out;
}

TimeSeriesDataset load_ucr_dataset(const std::filesystem::path& dir, const std::string& name,
                                   const LoadOptions& options, const DatasetMeta* meta) {
    const RawSplit train = parse_ucr_tsv(dir / (name + "_TRAIN.tsv"));
    const RawSplit test = parse_ucr_tsv(dir / (name + "_TEST.tsv"));
    const bool vary = meta && !meta->length.has_value();
    for (const auto& [split, label] : {std::pair{&train, "train"}, std::pair{&test, "test"}}) {
        if (split->widths_differ && !vary) {
            throw DatasetError(name + ": inconsistent column counts in " + label +
                               " split of a fixed-length dataset");
        }
    }

    TimeSeriesDataset ds;
    ds.name = name;

    std::vector<double> labels = train.labels;
    labels.insert(labels.end(), test.labels.begin(), test.labels.end());
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    ds.label_map = labels;
    ds.num_classes = labels.size();

    std::size_t length = 0;
    for (const RawSplit* s : {&train, &test}) {
        for (const auto& row : s->series) length = std::max(length, row.size());
    }
    ds.series_length = length;

    auto build = [&](const RawSplit& split, Tensor& x, std::vector<std::size_t>& y) {
        x = Tensor({split.series.size(), length});
        y.resize(split.series.size());
        for (std::size_t i = 0; i < split.series.size(); ++i) {
            const auto padded = pad_to_length(prepare_row(split.series[i], options.znormalize), length);
            std::copy(padded.begin(), padded.end(), x.data() + i * length);
            y[i] = static_cast<std::size_t>(
                std::lower_bound(labels.begin(), labels.end(), split.labels[i]) - labels.begin());
        }
    };
    build(train, ds.train_x, ds.train_y);
    build(test, ds.test_x, ds.test_y);

    if (meta) {
        auto report = [&](const std::string& what, std::size_t expected, std::size_t got) {
            if (expected != got) {
                ds.meta_mismatches.push_back(what + ": expected " + std::to_string(expected) + ", found " +
                                             std::to_string(got));
            }
        };
        report("train instances", meta->train, ds.train_y.size());
        report("test instances", meta->test, ds.test_y.size());
        report("classes", meta->classes, ds.num_classes);
        if (meta->length) report("series length", *meta->length, ds.series_length);
    }
    return ds;
}

Tensor gather_batch(const Tensor& rows, std::span<const std::size_t> indices) {
    const std::size_t length = rows.dim(1);
    Tensor batch({indices.size(), 1, length});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        std::copy_n(rows.data() + indices[i] * length, length, batch.data() + i * length);
    }
    return batch;
}

std::vector<std::size_t> gather_labels(std::span<const std::size_t> labels, std::span<const std::size_t> indices) {
    std::vector<std::size_t> out(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) out[i] = labels[indices[i]];
    return out;
}

namespace {

template <typename Pattern>
TimeSeriesDataset synthesize(const SyntheticSpec& spec, Pattern&& pattern) {
    TimeSeriesDataset ds;
    ds.name = spec.name;
    ds.num_classes = spec.classes;
    ds.series_length = spec.length;
    for (std::size_t c = 0; c < spec.classes; ++c) ds.label_map.push_back(static_cast<double>(c + 1));

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.noise);
    auto fill = [&](std::size_t count, Tensor& x, std::vector<std::size_t>& y) {
        x = Tensor({count, spec.length});
        y.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t label = i % spec.classes;
            y[i] = label;
            pattern(label, rng, std::span<double>(x.data() + i * spec.length, spec.length));
            for (std::size_t t = 0; t < spec.length; ++t) x[i * spec.length + t] += noise(rng);
        }
    };
    fill(spec.train, ds.train_x, ds.train_y);
    fill(spec.test, ds.test_x, ds.test_y);
    return ds;
}

}  // namespace

TimeSeriesDataset make_sine_vs_flat(const SyntheticSpec& spec) {
    SyntheticSpec two = spec;
    two.classes = 2;
    return synthesize(two, [](std::size_t label, std::mt19937_64& rng, std::span<double> out) {
        std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
        const double p = phase(rng);
        for (std::size_t t = 0; t < out.size(); ++t) {
            out[t] = label == 0 ? std::sin(2.0 * std::numbers::pi * 3.0 * static_cast<double>(t) /
                                               static_cast<double>(out.size()) + p)
                                : 0.0;
        }
    });
}

TimeSeriesDataset make_synthetic_dataset(const SyntheticSpec& spec) {
    return synthesize(spec, [](std::size_t label, std::mt19937_64& rng, std::span<double> out) {
        std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
        const double p = phase(rng);
        const double freq = static_cast<double>(label + 1);
        for (std::size_t t = 0; t < out.size(); ++t) {
            out[t] = std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(t) /
                              static_cast<double>(out.size()) + p);
        }
    });
}

void write_ucr_tsv(const TimeSeriesDataset& dataset, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto write = [&](const Tensor& x, const std::vector<std::size_t>& y, const std::string& suffix) {
        const auto path = dir / (dataset.name + suffix);
        std::ofstream out(path);
        if (!out) throw IoError("cannot write " + path.string());
        const std::size_t length = x.dim(1);
        std::array<char, 64> buf{};
        for (std::size_t i = 0; i < y.size(); ++i) {
            out << (y[i] + 1);
            for (std::size_t t = 0; t < length; ++t) {
                const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x[i * length + t]);
                out << '\t' << std::string_view(buf.data(), static_cast<std::size_t>(res.ptr - buf.data()));
            }
            out << '\n';
        }
        if (!out) throw IoError("failed writing " + path.string());
    };
    write(dataset.train_x, dataset.train_y, "_TRAIN.tsv");
    write(dataset.test_x, dataset.test_y, "_TEST.tsv");
}

std::vector<SyntheticSpec> smoke_standin_specs() {
    struct Row {
        const char* name;
        std::size_t train, test, classes, length;
    };
    const Row rows[] = {{"ChinatownStandin", 20, 345, 2, 24},
                        {"ECG200Standin", 100, 100, 2, 96},
                        {"SonyAIBORobotSurface1Standin", 20, 601, 2, 70},
                        {"CBFStandin", 30, 900, 3, 128}};
    std::vector<SyntheticSpec> out;
    std::uint64_t seed = 1;
    for (const auto& r : rows) {
        SyntheticSpec spec;
        spec.name = r.name;
        spec.train = r.train;
        spec.test = r.test;
        spec.classes = r.classes;
        spec.length = r.length;
        spec.noise = 0.3;
        spec.seed = seed++;
        out.push_back(spec);
    }
    return out;
}

}  // namespace efdls
