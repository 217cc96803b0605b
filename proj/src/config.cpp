#include "mmrmx/config.hpp"

#include <set>

#include "json.hpp"
#include "mmrmx/csv.hpp"
#include "mmrmx/rng.hpp"

namespace mmrmx {

namespace {

using nlohmann::json;

Eigen::VectorXd vector_field(const json& j, const std::string& field, int length) {
    Eigen::VectorXd v(length);
    if (j.is_number()) {
        v.setConstant(j.get<double>());
        return v;
    }
    if (!j.is_array() || static_cast<int>(j.size()) != length)
        throw ConfigError("field '" + field + "' must be a scalar or an array of length " +
                          std::to_string(length));
    for (int i = 0; i < length; ++i) {
        if (!j[i].is_number())
            throw ConfigError("field '" + field + "' must contain numbers");
        v[i] = j[i].get<double>();
    }
    return v;
}

DropoutKind parse_dropout_kind(const json& j) {
    if (!j.is_string())
        throw ConfigError("field 'dropout_kind' must be one of \"none\", \"mcar\", \"mar\"");
    const std::string s = j.get<std::string>();
    if (s == "none") return DropoutKind::None;
    if (s == "mcar") return DropoutKind::Mcar;
    if (s == "mar") return DropoutKind::Mar;
    throw ConfigError("field 'dropout_kind' has unknown value \"" + s + "\"");
}

template <typename T>
T scalar_field(const json& j, const std::string& field) {
    if constexpr (std::is_same_v<T, bool>) {
        if (!j.is_boolean()) throw ConfigError("field '" + field + "' must be a boolean");
        return j.get<bool>();
    } else {
        if (!j.is_number()) throw ConfigError("field '" + field + "' must be a number");
        return j.get<T>();
    }
}

ScenarioConfig parse_scenario(const json& obj, int index, std::uint64_t base_seed,
                              std::optional<std::uint64_t> seed_override) {
    if (!obj.is_object())
        throw ConfigError("scenario " + std::to_string(index) + " must be a JSON object");

    static const std::set<std::string> known = {
        "n",     "K",     "J",            "alpha",      "beta_base", "b",
        "tau",   "rho",   "delta",        "dropout_kind", "treat_prob",
        "n_reps", "alpha_level", "seed"};
    for (const auto& [key, value] : obj.items())
        if (!known.count(key))
            throw ConfigError("scenario " + std::to_string(index) + ": unknown field '" +
                              key + "'");

    ScenarioConfig cfg = default_scenario();
    if (obj.contains("n")) cfg.n = scalar_field<int>(obj["n"], "n");
    if (obj.contains("K")) cfg.K = scalar_field<int>(obj["K"], "K");
    if (obj.contains("J")) cfg.J = scalar_field<int>(obj["J"], "J");
    if (cfg.K < 1) throw ConfigError("field 'K' must be >= 1");
    if (cfg.J < 1) throw ConfigError("field 'J' must be >= 1");

    // Re-shape defaults to the requested dimensions before reading vectors.
    cfg.alpha = Eigen::VectorXd::Zero(cfg.J);
    cfg.tau = Eigen::VectorXd::Constant(cfg.J, cfg.tau.size() ? cfg.tau[0] : 0.0);
    cfg.beta_base = Eigen::VectorXd::Constant(cfg.K, 5.0);

    if (obj.contains("alpha")) cfg.alpha = vector_field(obj["alpha"], "alpha", cfg.J);
    if (obj.contains("beta_base"))
        cfg.beta_base = vector_field(obj["beta_base"], "beta_base", cfg.K);
    if (obj.contains("b")) cfg.b = scalar_field<double>(obj["b"], "b");
    if (obj.contains("tau")) cfg.tau = vector_field(obj["tau"], "tau", cfg.J);
    if (obj.contains("rho")) cfg.rho = scalar_field<double>(obj["rho"], "rho");
    if (obj.contains("delta")) cfg.delta = scalar_field<double>(obj["delta"], "delta");
    if (obj.contains("dropout_kind")) cfg.dropout_kind = parse_dropout_kind(obj["dropout_kind"]);
    if (obj.contains("treat_prob"))
        cfg.treat_prob = scalar_field<double>(obj["treat_prob"], "treat_prob");
    if (obj.contains("n_reps")) cfg.n_reps = scalar_field<int>(obj["n_reps"], "n_reps");
    if (obj.contains("alpha_level"))
        cfg.alpha_level = scalar_field<double>(obj["alpha_level"], "alpha_level");

    if (seed_override)
        cfg.seed = derive_seed(*seed_override, static_cast<std::uint64_t>(index));
    else if (obj.contains("seed"))
        cfg.seed = scalar_field<std::uint64_t>(obj["seed"], "seed");
    else
        cfg.seed = derive_seed(base_seed, static_cast<std::uint64_t>(index));

    cfg.validate();
    return cfg;
}

}  // namespace

std::vector<ScenarioConfig> load_grid_config(const std::string& json_text,
                                             std::optional<std::uint64_t> seed_override) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }

    std::uint64_t base_seed = 0;
    const json* scenarios = nullptr;
    if (doc.is_object() && doc.contains("scenarios")) {
        for (const auto& [key, value] : doc.items())
            if (key != "scenarios" && key != "seed")
                throw ConfigError("unknown top-level field '" + key + "'");
        if (doc.contains("seed")) {
            if (!doc["seed"].is_number())
                throw ConfigError("field 'seed' must be a number");
            base_seed = doc["seed"].get<std::uint64_t>();
        }
        scenarios = &doc["scenarios"];
        if (!scenarios->is_array()) throw ConfigError("field 'scenarios' must be an array");
    } else if (doc.is_array()) {
        scenarios = &doc;
    }

    std::vector<ScenarioConfig> grid;
    if (scenarios) {
        if (scenarios->empty()) throw ConfigError("field 'scenarios' is empty");
        for (std::size_t i = 0; i < scenarios->size(); ++i)
            grid.push_back(parse_scenario((*scenarios)[i], static_cast<int>(i), base_seed,
                                          seed_override));
    } else {
        grid.push_back(parse_scenario(doc, 0, base_seed, seed_override));
    }
    return grid;
}

std::vector<ScenarioConfig> load_grid_config_file(const std::string& path,
                                                  std::optional<std::uint64_t> seed_override) {
    return load_grid_config(read_file(path), seed_override);
}

}  // namespace mmrmx
