#include "efdls/metrics.hpp"

#include "efdls/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace efdls {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string read_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + file.string());
    out << text;
    if (!out.flush()) throw IoError("write failed for " + file.string());
}

void require_two(const AccuracyTable& table, const char* what) {
    if (table.algorithms.size() < 2) {
        throw ConfigError(std::string(what) + " needs at least 2 algorithms, table has " +
                          std::to_string(table.algorithms.size()));
    }
}

}  // namespace

std::size_t AccuracyTable::column(std::string_view algorithm) const {
    const auto it = std::find(algorithms.begin(), algorithms.end(), algorithm);
    if (it == algorithms.end()) throw ConfigError("no algorithm column named '" + std::string(algorithm) + "'");
    return static_cast<std::size_t>(it - algorithms.begin());
}

void AccuracyTable::add_row(std::string dataset, std::vector<double> row) {
    if (row.size() != algorithms.size()) {
        throw DimensionError("row " + dataset + " has " + std::to_string(row.size()) + " values for " +
                             std::to_string(algorithms.size()) + " algorithms");
    }
    datasets.push_back(std::move(dataset));
    values.insert(values.end(), row.begin(), row.end());
}

AccuracyTable parse_accuracy_csv(std::string_view text) {
    AccuracyTable table;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (!text.empty()) {
        const std::size_t nl = text.find('\n');
        const std::string_view line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_commas(line);
        if (!header_seen) {
            if (cells.size() < 2) throw ConfigError("accuracy CSV header needs a dataset column and an algorithm");
            for (std::size_t i = 1; i < cells.size(); ++i) {
                if (cells[i].empty()) throw ConfigError("accuracy CSV header has an empty algorithm name");
                table.algorithms.emplace_back(cells[i]);
            }
            header_seen = true;
            continue;
        }
        if (cells.size() != table.algorithms.size() + 1) {
            throw ConfigError("accuracy CSV line " + std::to_string(line_no) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(table.algorithms.size() + 1));
        }
        std::vector<double> row;
        for (std::size_t i = 1; i < cells.size(); ++i) {
            double v = 0.0;
            const auto res = std::from_chars(cells[i].data(), cells[i].data() + cells[i].size(), v);
            if (res.ec != std::errc{} || res.ptr != cells[i].data() + cells[i].size() || !std::isfinite(v)) {
                throw ConfigError("accuracy CSV line " + std::to_string(line_no) + ": bad value '" +
                                  std::string(cells[i]) + "'");
            }
            row.push_back(v);
        }
        table.add_row(std::string(cells[0]), std::move(row));
    }
    if (!header_seen) throw ConfigError("accuracy CSV is empty");
    if (table.datasets.empty()) throw ConfigError("accuracy CSV has no data rows");
    return table;
}

AccuracyTable read_accuracy_csv(const std::filesystem::path& file) { return parse_accuracy_csv(read_file(file)); }

std::string format_accuracy_csv(const AccuracyTable& table) {
    std::string out = "dataset";
    for (const auto& a : table.algorithms) out += "," + a;
    out += "\n";
    for (std::size_t r = 0; r < table.datasets.size(); ++r) {
        out += table.datasets[r];
        for (std::size_t c = 0; c < table.algorithms.size(); ++c) out += "," + shortest(table.at(r, c));
        out += "\n";
    }
    return out;
}

double top1_accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> labels) {
    if (predictions.size() != labels.size()) {
        throw DimensionError("top1_accuracy: " + std::to_string(predictions.size()) + " predictions vs " +
                             std::to_string(labels.size()) + " labels");
    }
    if (labels.empty()) throw DimensionError("top1_accuracy: no predictions");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

std::vector<WinTieLose> win_tie_lose_best(const AccuracyTable& table) {
    require_two(table, "win/tie/lose");
    const std::size_t k = table.algorithms.size();
    std::vector<WinTieLose> out(k);
    for (std::size_t r = 0; r < table.datasets.size(); ++r) {
        double best = table.at(r, 0);
        for (std::size_t c = 1; c < k; ++c) best = std::max(best, table.at(r, c));
        std::size_t at_max = 0;
        for (std::size_t c = 0; c < k; ++c) at_max += std::abs(table.at(r, c) - best) <= kAccuracyTieTolerance;
        for (std::size_t c = 0; c < k; ++c) {
            if (std::abs(table.at(r, c) - best) > kAccuracyTieTolerance) {
                ++out[c].lose;
            } else if (at_max == 1) {
                ++out[c].win;
            } else {
                ++out[c].tie;
            }
        }
    }
    for (auto& w : out) w.best = w.win + w.tie;
    return out;
}

double mean_acc(const AccuracyTable& table, std::string_view algorithm) {
    const std::size_t c = table.column(algorithm);
    if (table.datasets.empty()) throw DimensionError("mean_acc on an empty table");
    double sum = 0.0;
    for (std::size_t r = 0; r < table.datasets.size(); ++r) sum += table.at(r, c);
    return sum / static_cast<double>(table.datasets.size());
}

std::vector<double> avg_rank(const AccuracyTable& table) {
    require_two(table, "avg_rank");
    const std::size_t k = table.algorithms.size();
    std::vector<double> sums(k, 0.0);
    std::vector<std::size_t> order(k);
    for (std::size_t r = 0; r < table.datasets.size(); ++r) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return table.at(r, a) > table.at(r, b); });
        std::size_t i = 0;
        while (i < k) {
            std::size_t j = i + 1;
            while (j < k && std::abs(table.at(r, order[j]) - table.at(r, order[i])) <= kAccuracyTieTolerance) ++j;
            // Positions i+1..j share their mean rank.
            const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
            for (std::size_t t = i; t < j; ++t) sums[order[t]] += rank;
            i = j;
        }
    }
    for (auto& s : sums) s /= static_cast<double>(table.datasets.size());
    return sums;
}

MetricReport summarize(const AccuracyTable& table) {
    MetricReport report;
    report.table = table;
    const bool comparable = table.algorithms.size() >= 2;
    std::vector<WinTieLose> counts;
    std::vector<double> ranks;
    if (comparable) {
        counts = win_tie_lose_best(table);
        ranks = avg_rank(table);
    }
    for (std::size_t c = 0; c < table.algorithms.size(); ++c) {
        AlgorithmSummary s;
        s.name = table.algorithms[c];
        s.mean_acc = mean_acc(table, s.name);
        if (comparable) {
            s.counts = counts[c];
            s.avg_rank = ranks[c];
        }
        report.algorithms.push_back(std::move(s));
    }
    return report;
}

std::string format_summary_table(const MetricReport& report) {
    std::ostringstream out;
    out << std::left << std::setw(10) << "";
    for (const auto& a : report.algorithms) out << std::right << std::setw(10) << a.name;
    out << "\n";
    auto row = [&](const char* label, auto&& cell) {
        out << std::left << std::setw(10) << label;
        for (const auto& a : report.algorithms) out << std::right << std::setw(10) << cell(a);
        out << "\n";
    };
    auto count = [](auto member) {
        return [member](const AlgorithmSummary& a) {
            return a.counts ? std::to_string((*a.counts).*member) : std::string("-");
        };
    };
    row("Win", count(&WinTieLose::win));
    row("Tie", count(&WinTieLose::tie));
    row("Lose", count(&WinTieLose::lose));
    row("Best", count(&WinTieLose::best));
    auto fixed4 = [](double v) {
        std::ostringstream s;
        s << std::fixed << std::setprecision(4) << v;
        return s.str();
    };
    row("MeanACC", [&](const AlgorithmSummary& a) { return fixed4(a.mean_acc); });
    row("AVG_rank", [&](const AlgorithmSummary& a) { return a.avg_rank ? fixed4(*a.avg_rank) : std::string("-"); });
    return out.str();
}

nlohmann::ordered_json summary_json(const MetricReport& report) {
    nlohmann::ordered_json algorithms = nlohmann::ordered_json::object();
    for (const auto& a : report.algorithms) {
        nlohmann::ordered_json j;
        if (a.counts) {
            j["win"] = a.counts->win;
            j["tie"] = a.counts->tie;
            j["lose"] = a.counts->lose;
            j["best"] = a.counts->best;
        } else {
            j["win"] = nullptr;
            j["tie"] = nullptr;
            j["lose"] = nullptr;
            j["best"] = nullptr;
        }
        j["mean_acc"] = a.mean_acc;
        j["avg_rank"] = a.avg_rank ? nlohmann::ordered_json(*a.avg_rank) : nlohmann::ordered_json(nullptr);
        algorithms[a.name] = std::move(j);
    }
    nlohmann::ordered_json root;
    root["algorithms"] = std::move(algorithms);
    return root;
}

void emit_report(const MetricReport& report, const std::filesystem::path& dir, const nlohmann::ordered_json* extra) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_file(dir / kResultsFile, format_accuracy_csv(report.table));
    nlohmann::ordered_json root = summary_json(report);
    if (extra != nullptr) {
        for (const auto& [key, value] : extra->items()) root[key] = value;
    }
    write_file(dir / kSummaryFile, root.dump(2) + "\n");
}

MetricReport read_report(const std::filesystem::path& dir) {
    MetricReport report;
    report.table = read_accuracy_csv(dir / kResultsFile);
    nlohmann::ordered_json root;
    try {
        root = nlohmann::ordered_json::parse(read_file(dir / kSummaryFile));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("cannot parse " + (dir / kSummaryFile).string() + ": " + e.what());
    }
    for (const auto& [name, j] : root.at("algorithms").items()) {
        AlgorithmSummary s;
        s.name = name;
        if (!j.at("win").is_null()) {
            WinTieLose w;
            w.win = j.at("win").get<std::size_t>();
            w.tie = j.at("tie").get<std::size_t>();
            w.lose = j.at("lose").get<std::size_t>();
            w.best = j.at("best").get<std::size_t>();
            s.counts = w;
        }
        s.mean_acc = j.at("mean_acc").get<double>();
        if (!j.at("avg_rank").is_null()) s.avg_rank = j.at("avg_rank").get<double>();
        report.algorithms.push_back(std::move(s));
    }
    return report;
}

}  // namespace efdls
