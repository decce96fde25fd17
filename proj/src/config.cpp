#include "efdls/config.hpp"

#include "efdls/errors.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace efdls {

namespace {

using Json = nlohmann::ordered_json;

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <class T>
T get(const Json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

std::size_t get_count(const Json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
        throw ConfigError(std::string("config key '") + key + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

SyntheticSpec parse_synthetic(const Json& j, std::string& kind) {
    reject_unknown(j, {"kind", "train", "test", "classes", "length", "noise", "seed"}, "synthetic dataset");
    SyntheticSpec s;
    if (j.contains("kind")) kind = get<std::string>(j, "kind");
    if (j.contains("train")) s.train = get_count(j, "train");
    if (j.contains("test")) s.test = get_count(j, "test");
    if (j.contains("classes")) s.classes = get_count(j, "classes");
    if (j.contains("length")) s.length = get_count(j, "length");
    if (j.contains("noise")) s.noise = get<double>(j, "noise");
    if (j.contains("seed")) s.seed = get<std::uint64_t>(j, "seed");
    return s;
}

std::vector<DatasetSpec> parse_datasets(const Json& j) {
    std::vector<DatasetSpec> out;
    if (j.is_object()) {
        for (const auto& [name, path] : j.items()) {
            if (!path.is_string()) throw ConfigError("datasets: path for '" + name + "' must be a string");
            out.push_back({name, path.get<std::string>(), std::nullopt, "sine_vs_flat"});
        }
        return out;
    }
    if (!j.is_array()) throw ConfigError("datasets must be a list or a name-to-path object");
    for (const auto& item : j) {
        DatasetSpec spec;
        if (item.is_string()) {
            spec.name = item.get<std::string>();
        } else if (item.is_object()) {
            reject_unknown(item, {"name", "path", "synthetic"}, "dataset entry");
            spec.name = get<std::string>(item, "name");
            if (item.contains("path")) spec.path = get<std::string>(item, "path");
            if (item.contains("synthetic")) spec.synthetic = parse_synthetic(item.at("synthetic"), spec.synthetic_kind);
        } else {
            throw ConfigError("dataset entries must be names or objects");
        }
        if (spec.name.empty()) throw ConfigError("dataset entry with an empty name");
        out.push_back(std::move(spec));
    }
    return out;
}

}  // namespace

ExperimentConfig parse_config(const Json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(j,
                   {"strategy", "n_tot", "conn_ratio", "fles", "seed", "epsilon", "batch_size", "local_epochs", "lr",
                    "weight_decay", "bn_paper_literal", "znormalize", "resample_connected", "transport", "port",
                    "architecture", "datasets", "output_dir"},
                   "config");
    ExperimentConfig c;
    FederationConfig& f = c.federation;
    if (j.contains("strategy")) {
        const auto& s = j.at("strategy");
        c.strategies.clear();
        if (s.is_string()) {
            c.strategies.push_back(parse_strategy(s.get<std::string>()));
        } else if (s.is_array() && !s.empty()) {
            for (const auto& item : s) {
                if (!item.is_string()) throw ConfigError("strategy list entries must be strings");
                c.strategies.push_back(parse_strategy(item.get<std::string>()));
            }
        } else {
            throw ConfigError("strategy must be a name or a non-empty list of names");
        }
    }
    if (j.contains("n_tot")) f.n_tot = get_count(j, "n_tot");
    if (j.contains("conn_ratio")) f.conn_ratio = get<double>(j, "conn_ratio");
    if (j.contains("fles")) f.fles = get_count(j, "fles");
    if (j.contains("seed")) f.seed = get<std::uint64_t>(j, "seed");
    if (j.contains("epsilon")) f.fbst.epsilon = get<double>(j, "epsilon");
    if (j.contains("batch_size")) f.fbst.batch_size = get_count(j, "batch_size");
    if (j.contains("local_epochs")) f.fbst.local_epochs = get_count(j, "local_epochs");
    if (j.contains("lr")) f.fbst.adam.lr = get<double>(j, "lr");
    if (j.contains("weight_decay")) f.fbst.adam.weight_decay = get<double>(j, "weight_decay");
    if (j.contains("bn_paper_literal")) f.extractor.bn_literal_delta = get<bool>(j, "bn_paper_literal");
    if (j.contains("znormalize")) f.znormalize = get<bool>(j, "znormalize");
    if (j.contains("resample_connected")) f.resample_connected = get<bool>(j, "resample_connected");
    if (j.contains("transport")) f.transport = parse_transport(get<std::string>(j, "transport"));
    if (j.contains("port")) {
        const std::size_t port = get_count(j, "port");
        if (port > 65535) throw ConfigError("port out of range");
        f.port = static_cast<std::uint16_t>(port);
    }
    if (j.contains("architecture")) {
        const auto& a = j.at("architecture");
        reject_unknown(a, {"blocks", "hidden_width"}, "architecture");
        if (a.contains("blocks")) {
            const auto& blocks = a.at("blocks");
            if (!blocks.is_array() || blocks.size() != 3) throw ConfigError("architecture.blocks needs 3 entries");
            for (std::size_t i = 0; i < 3; ++i) {
                const auto& b = blocks[i];
                if (!b.is_array() || b.size() != 2) throw ConfigError("architecture block must be [kernel, channels]");
                f.extractor.blocks[i].kernel = b[0].get<std::size_t>();
                f.extractor.blocks[i].channels = b[1].get<std::size_t>();
                if (f.extractor.blocks[i].channels == 0) throw ConfigError("architecture block with 0 channels");
            }
        }
        if (a.contains("hidden_width")) f.extractor.hidden_width = get_count(a, "hidden_width");
    }
    if (j.contains("datasets")) f.datasets = parse_datasets(j.at("datasets"));
    if (j.contains("output_dir")) c.output_dir = get<std::string>(j, "output_dir");
    validate(f.fbst);
    if (f.fles == 0) throw ConfigError("fles must be positive");
    connected_count(f.n_tot == 0 ? std::max<std::size_t>(f.datasets.size(), 1) : f.n_tot, f.conn_ratio);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config " + file.string());
    try {
        return parse_config(Json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + file.string() + " is not valid JSON: " + e.what());
    }
}

Json to_json(const ExperimentConfig& c) {
    const FederationConfig& f = c.federation;
    Json j;
    Json strategies = Json::array();
    for (auto s : c.strategies) strategies.push_back(to_string(s));
    j["strategy"] = strategies;
    j["n_tot"] = f.n_tot;
    j["conn_ratio"] = f.conn_ratio;
    j["fles"] = f.fles;
    j["seed"] = f.seed;
    j["epsilon"] = f.fbst.epsilon;
    j["batch_size"] = f.fbst.batch_size;
    j["local_epochs"] = f.fbst.local_epochs;
    j["lr"] = f.fbst.adam.lr;
    j["weight_decay"] = f.fbst.adam.weight_decay;
    j["bn_paper_literal"] = f.extractor.bn_literal_delta;
    j["znormalize"] = f.znormalize;
    j["resample_connected"] = f.resample_connected;
    j["transport"] = to_string(f.transport);
    j["port"] = f.port;
    Json blocks = Json::array();
    for (const auto& b : f.extractor.blocks) blocks.push_back({b.kernel, b.channels});
    j["architecture"] = {{"blocks", blocks}, {"hidden_width", f.extractor.hidden_width}};
    Json datasets = Json::array();
    for (const auto& d : f.datasets) {
        Json e;
        e["name"] = d.name;
        if (!d.path.empty()) e["path"] = d.path;
        if (d.synthetic) {
            const auto& s = *d.synthetic;
            e["synthetic"] = {{"kind", d.synthetic_kind}, {"train", s.train},     {"test", s.test},
                              {"classes", s.classes},   {"length", s.length},   {"noise", s.noise},
                              {"seed", s.seed}};
        }
        datasets.push_back(std::move(e));
    }
    j["datasets"] = datasets;
    j["output_dir"] = c.output_dir;
    return j;
}

}  // namespace efdls
