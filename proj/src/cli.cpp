#include "efdls/cli.hpp"

#include "efdls/errors.hpp"
#include "efdls/gradcheck.hpp"
#include "efdls/kernels.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace efdls {

namespace {

using Json = nlohmann::ordered_json;

std::vector<std::string> row_names(const std::vector<UserResult>& users) {
    std::map<std::string, std::size_t> seen;
    for (const auto& u : users) ++seen[u.dataset];
    std::vector<std::string> names;
    for (const auto& u : users) {
        names.push_back(seen[u.dataset] > 1 ? u.dataset + "#" + std::to_string(u.user_id) : u.dataset);
    }
    return names;
}

Json loss_json(const LossReport& r) {
    return Json{{"epoch", r.epoch}, {"kd", r.kd}, {"sup", r.sup}, {"total", r.total}, {"distilled", r.distilled}};
}

Json run_json(const FederationResult& run, std::size_t fles) {
    Json j;
    j["n_tot"] = run.n_tot;
    j["n_conn"] = run.n_conn;
    j["bundle_bytes"] = run.bundle_bytes;
    const std::uint64_t uploads = run.ledger.count(Direction::Upload);
    const std::uint64_t epochs_exchanged = run.n_conn == 0 || uploads == 0 ? 0 : uploads / run.n_conn;
    j["ledger"] = {{"uploads", uploads},
                   {"downloads", run.ledger.count(Direction::Download)},
                   {"upload_bytes", run.ledger.bytes(Direction::Upload)},
                   {"download_bytes", run.ledger.bytes(Direction::Download)},
                   {"total_bytes", run.ledger.total_bytes()},
                   {"comm_overhead", uploads == 0 ? 0 : comm_overhead(run.bundle_bytes, fles, run.n_conn)},
                   {"epochs_exchanged", epochs_exchanged}};
    Json users = Json::array();
    for (const auto& u : run.users) {
        Json losses = Json::array();
        for (const auto& l : u.losses) losses.push_back(loss_json(l));
        users.push_back({{"user_id", u.user_id},
                         {"dataset", u.dataset},
                         {"connected", u.connected},
                         {"train_accuracy", u.train_accuracy},
                         {"test_accuracy", u.test_accuracy},
                         {"losses", losses}});
    }
    j["users"] = users;
    return j;
}

void write_text(const std::filesystem::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + file.string());
    out << text;
    if (!out.flush()) throw IoError("write failed for " + file.string());
}

void prepare_output_dir(const std::filesystem::path& dir, bool force) {
    std::error_code ec;
    if (std::filesystem::exists(dir, ec) && !std::filesystem::is_empty(dir, ec) && !force) {
        throw IoError("output directory " + dir.string() + " is not empty (pass --force to overwrite)");
    }
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::string fmt(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

struct CommonFlags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> strategy;
    std::optional<double> ratio;
    std::optional<double> epsilon;
    std::optional<std::size_t> fles;
    bool force = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config, "JSON config file")->required()->check(CLI::ExistingFile);
        cmd->add_option("--out", out, "Output directory (overrides output_dir)");
        cmd->add_option("--seed", seed, "Run seed");
        cmd->add_option("--strategy", strategy, "baseline, fedavg, fkd or efdls (repeatable)")->delimiter(',');
        cmd->add_option("--ratio", ratio, "N_conn / N_tot");
        cmd->add_option("--epsilon", epsilon, "Supervised weight in the total loss");
        cmd->add_option("--fles", fles, "Federated learning epochs");
        cmd->add_flag("--force", force, "Overwrite a non-empty output directory");
    }

    ExperimentConfig load() const {
        ExperimentConfig c = load_config(config);
        if (seed) c.federation.seed = *seed;
        if (!strategy.empty()) {
            c.strategies.clear();
            for (const auto& s : strategy) c.strategies.push_back(parse_strategy(s));
        }
        if (ratio) c.federation.conn_ratio = *ratio;
        if (epsilon) c.federation.fbst.epsilon = *epsilon;
        if (fles) c.federation.fles = *fles;
        if (!out.empty()) c.output_dir = out;
        if (c.output_dir.empty()) throw ConfigError("no output directory: set output_dir or pass --out");
        // Re-validate with the overrides applied.
        return parse_config(to_json(c));
    }
};

int cmd_run(const CommonFlags& flags, std::ostream& out) {
    const ExperimentConfig config = flags.load();
    prepare_output_dir(config.output_dir, flags.force);
    const ExperimentOutcome outcome = run_experiment(config);
    write_outcome(config, outcome, config.output_dir);
    out << format_summary_table(outcome.report);
    for (const auto& run : outcome.runs) {
        out << to_string(run.strategy) << ": n_conn=" << run.n_conn << " ledger_bytes=" << run.ledger.total_bytes()
            << "\n";
    }
    out << "wrote " << config.output_dir << "\n";
    return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::string& setting, const std::vector<double>& values,
              std::ostream& out, std::ostream& err) {
    const ExperimentConfig base = flags.load();
    prepare_output_dir(base.output_dir, flags.force);
    write_text(std::filesystem::path(base.output_dir) / kEffectiveConfigFile, to_json(base).dump(2) + "\n");
    std::string csv = "setting,value,strategy,n_tot,n_conn,mean_acc,status\n";
    int failures = 0;
    for (double v : values) {
        ExperimentConfig c = base;
        std::ostringstream sub;
        sub << setting << "-" << v;
        c.output_dir = (std::filesystem::path(base.output_dir) / sub.str()).string();
        try {
            if (setting == "ratio") {
                c.federation.conn_ratio = v;
            } else {
                c.federation.fbst.epsilon = v;
            }
            c = parse_config(to_json(c));
            prepare_output_dir(c.output_dir, true);
            const ExperimentOutcome outcome = run_experiment(c);
            write_outcome(c, outcome, c.output_dir);
            for (std::size_t i = 0; i < outcome.runs.size(); ++i) {
                const auto& run = outcome.runs[i];
                csv += setting + "," + fmt(v) + "," + to_string(run.strategy) + "," + std::to_string(run.n_tot) + "," +
                       std::to_string(run.n_conn) + "," + fmt(outcome.report.algorithms[i].mean_acc) + ",ok\n";
            }
            out << setting << "=" << v << " done\n";
        } catch (const std::exception& e) {
            ++failures;
            std::string msg = e.what();
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            csv += setting + "," + fmt(v) + ",,,,,error: " + msg + "\n";
            err << setting << "=" << v << " failed: " << e.what() << "\n";
        }
    }
    write_text(std::filesystem::path(base.output_dir) / kSweepFile, csv);
    out << "wrote " << (std::filesystem::path(base.output_dir) / kSweepFile).string() << "\n";
    return failures == 0 ? 0 : 1;
}

int cmd_eval_table(const std::string& csv, const std::string& out_dir, bool force, std::ostream& out,
                   std::ostream& err) {
    const AccuracyTable table = read_accuracy_csv(csv);
    const MetricReport report = summarize(table);
    out << format_summary_table(report);
    if (!out_dir.empty()) {
        prepare_output_dir(out_dir, force);
        emit_report(report, out_dir);
    }
    if (table.algorithms.size() < 2) {
        err << "win/tie/lose and AVG_rank are undefined for a single algorithm column\n";
        return 2;
    }
    return 0;
}

int cmd_gradcheck(std::size_t seeds, const std::string& loss, std::size_t samples, std::size_t length,
                  std::ostream& out) {
    std::vector<GradcheckLoss> losses;
    if (loss == "ce" || loss == "both") losses.push_back(GradcheckLoss::CrossEntropy);
    if (loss == "combined" || loss == "both") losses.push_back(GradcheckLoss::Combined);
    if (losses.empty()) throw ConfigError("--loss must be ce, combined or both");
    double worst = 0.0;
    bool invariants = true;
    for (auto kind : losses) {
        for (std::size_t s = 0; s < seeds; ++s) {
            ExtractorGradcheckOptions o;
            o.loss = kind;
            o.seed = s;
            o.samples_per_param = samples;
            o.length = length;
            const GradcheckResult r = gradcheck_extractor(o);
            worst = std::max(worst, r.max_relative_error);
            invariants = invariants && r.invariants_ok;
            out << (kind == GradcheckLoss::Combined ? "combined" : "ce") << " seed " << s << ": max_rel_err "
                << std::scientific << std::setprecision(3) << r.max_relative_error << std::defaultfloat << " ("
                << r.worst_param << "[" << r.worst_index << "]), " << r.checked << " coords"
                << (r.invariants_ok ? "" : ", INVARIANT BIAS GRADIENT NONZERO") << "\n";
        }
    }
    const bool ok = worst < 1e-4 && invariants;
    out << (ok ? "gradcheck passed" : "gradcheck FAILED") << " (worst " << worst << ", threads " << kernels::max_threads()
        << ")\n";
    return ok ? 0 : 1;
}

int cmd_make_synthetic(const std::string& out_dir, bool force, std::ostream& out) {
    prepare_output_dir(out_dir, force);
    for (const auto& spec : smoke_standin_specs()) {
        write_ucr_tsv(make_synthetic_dataset(spec), out_dir);
        out << "wrote " << spec.name << "\n";
    }
    return 0;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& config, const std::vector<TimeSeriesDataset>* datasets) {
    std::vector<TimeSeriesDataset> loaded;
    if (datasets == nullptr) {
        loaded = load_datasets(config.federation);
        datasets = &loaded;
    }
    ExperimentOutcome outcome;
    AccuracyTable table;
    for (auto s : config.strategies) table.algorithms.push_back(to_string(s));
    outcome.runs_json = Json::object();
    for (auto s : config.strategies) {
        FederationConfig f = config.federation;
        f.strategy = s;
        outcome.runs.push_back(run_federation(f, *datasets));
        outcome.runs_json[to_string(s)] = run_json(outcome.runs.back(), f.fles);
    }
    const auto names = row_names(outcome.runs.front().users);
    for (std::size_t u = 0; u < names.size(); ++u) {
        std::vector<double> row;
        for (const auto& run : outcome.runs) row.push_back(run.users[u].test_accuracy);
        table.add_row(names[u], std::move(row));
    }
    outcome.report = summarize(table);
    return outcome;
}

void write_outcome(const ExperimentConfig& config, const ExperimentOutcome& outcome,
                   const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_text(dir / kEffectiveConfigFile, to_json(config).dump(2) + "\n");
    Json extra;
    extra["runs"] = outcome.runs_json;
    emit_report(outcome.report, dir, &extra);
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Federated distillation for time series classification"};
    app.require_subcommand(1);

    CommonFlags run_flags, ratio_flags, eps_flags;
    auto* run = app.add_subcommand("run", "Run a federation for each configured strategy");
    run_flags.attach(run);

    std::vector<double> ratios;
    auto* sweep_ratio = app.add_subcommand("sweep-ratio", "One run per connection ratio");
    ratio_flags.attach(sweep_ratio);
    sweep_ratio->add_option("--ratios", ratios, "Comma-separated ratios")->required()->delimiter(',');

    std::vector<double> epsilons;
    auto* sweep_eps = app.add_subcommand("sweep-epsilon", "One run per epsilon");
    eps_flags.attach(sweep_eps);
    sweep_eps->add_option("--epsilons", epsilons, "Comma-separated epsilons")->required()->delimiter(',');

    std::string table_csv, table_out;
    bool table_force = false;
    auto* eval = app.add_subcommand("eval-table", "Win/Tie/Lose/Best, MeanACC and AVG_rank of an accuracy CSV");
    eval->add_option("csv", table_csv, "Accuracy table (dataset,<alg>,...)")->required()->check(CLI::ExistingFile);
    eval->add_option("--out", table_out, "Also write results.csv and summary.json here");
    eval->add_flag("--force", table_force, "Overwrite a non-empty output directory");

    std::size_t gc_seeds = 20, gc_samples = 4, gc_length = 12;
    std::string gc_loss = "both";
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the extractor gradients");
    gradcheck->add_option("--seeds", gc_seeds, "Number of seeds")->check(CLI::PositiveNumber);
    gradcheck->add_option("--loss", gc_loss, "ce, combined or both");
    gradcheck->add_option("--samples", gc_samples, "Coordinates checked per tensor (0 = all)");
    gradcheck->add_option("--length", gc_length, "Series length")->check(CLI::PositiveNumber);

    std::string synth_out;
    bool synth_force = false;
    auto* synth = app.add_subcommand("make-synthetic", "Write synthetic stand-in datasets in UCR TSV format");
    synth->add_option("--out", synth_out, "Target directory")->required();
    synth->add_flag("--force", synth_force, "Write into a non-empty directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (run->parsed()) return cmd_run(run_flags, out);
        if (sweep_ratio->parsed()) return cmd_sweep(ratio_flags, "ratio", ratios, out, err);
        if (sweep_eps->parsed()) return cmd_sweep(eps_flags, "epsilon", epsilons, out, err);
        if (eval->parsed()) return cmd_eval_table(table_csv, table_out, table_force, out, err);
        if (gradcheck->parsed()) return cmd_gradcheck(gc_seeds, gc_loss, gc_samples, gc_length, out);
        if (synth->parsed()) return cmd_make_synthetic(synth_out, synth_force, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace efdls
