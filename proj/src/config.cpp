#include "hetsim/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "hetsim/rng.hpp"
#include "json.hpp"

namespace hetsim {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw std::runtime_error("config: '" + where + "' must be an object");
    for (const auto& [key, v] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw std::runtime_error("config: unknown key '" + where + "." + key + "'");
    }
}

}  // namespace

Config parse_config(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(origin + ": " + e.what());
    }
    reject_unknown(j, "config", {"seed", "output_dir", "dataset", "cluster", "models", "scenario"});

    Config cfg;
    cfg.seed = j.value("seed", cfg.seed);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);

    if (j.contains("dataset")) {
        const json& d = j["dataset"];
        reject_unknown(d, "dataset", {"path", "synthetic"});
        if (d.contains("path") && d.contains("synthetic"))
            throw std::runtime_error("config: dataset.path and dataset.synthetic are mutually exclusive");
        if (d.contains("path")) cfg.dataset.path = d["path"].get<std::string>();
        if (d.contains("synthetic")) {
            const json& s = d["synthetic"];
            reject_unknown(s, "dataset.synthetic",
                           {"accelerators", "families", "batches_per_family", "interference", "seed", "speed_base"});
            SyntheticSpec spec;
            spec.accelerators = s.value("accelerators", spec.accelerators);
            spec.families = s.value("families", spec.families);
            spec.batches_per_family = s.value("batches_per_family", spec.batches_per_family);
            spec.interference = s.value("interference", spec.interference);
            spec.seed = s.value("seed", spec.seed);
            spec.speed_base = s.value("speed_base", spec.speed_base);
            cfg.dataset.synthetic = spec;
        }
    }
    if (j.contains("cluster")) {
        const json& c = j["cluster"];
        reject_unknown(c, "cluster", {"servers", "accelerators", "power"});
        cfg.cluster.servers = c.value("servers", cfg.cluster.servers);
        if (cfg.cluster.servers < 1) throw std::runtime_error("config: cluster.servers must be >= 1");
        if (c.contains("accelerators")) cfg.cluster.accelerators = c["accelerators"].get<std::vector<std::string>>();
        if (c.contains("power")) {
            if (!c["power"].is_object()) throw std::runtime_error("config: cluster.power must be an object");
            for (const auto& [acc, p] : c["power"].items()) {
                reject_unknown(p, "cluster.power." + acc, {"idle", "per_unit_load", "capacity"});
                PowerOverride o;
                if (p.contains("idle")) o.idle = p["idle"].get<double>();
                if (p.contains("per_unit_load")) o.per_unit_load = p["per_unit_load"].get<double>();
                if (p.contains("capacity")) o.capacity = p["capacity"].get<int>();
                cfg.cluster.power[acc] = o;
            }
        }
    }
    if (j.contains("models")) {
        const json& m = j["models"];
        reject_unknown(m, "models",
                       {"hidden", "learning_rate", "epochs", "batch_size", "patience", "p1_neighbors",
                        "p2_noise_sigma", "train_frac", "val_frac", "p1_path", "p2_path"});
        if (m.contains("hidden")) cfg.models.hidden = m["hidden"].get<std::vector<int>>();
        cfg.models.learning_rate = m.value("learning_rate", cfg.models.learning_rate);
        cfg.models.epochs = m.value("epochs", cfg.models.epochs);
        cfg.models.batch_size = m.value("batch_size", cfg.models.batch_size);
        cfg.models.patience = m.value("patience", cfg.models.patience);
        cfg.models.p1_neighbors = m.value("p1_neighbors", cfg.models.p1_neighbors);
        cfg.models.p2_noise_sigma = m.value("p2_noise_sigma", cfg.models.p2_noise_sigma);
        cfg.models.train_frac = m.value("train_frac", cfg.models.train_frac);
        cfg.models.val_frac = m.value("val_frac", cfg.models.val_frac);
        if (m.contains("p1_path")) cfg.models.p1_path = m["p1_path"].get<std::string>();
        if (m.contains("p2_path")) cfg.models.p2_path = m["p2_path"].get<std::string>();
    }
    if (j.contains("scenario")) {
        const json& s = j["scenario"];
        reject_unknown(s, "scenario",
                       {"bootstrap_jobs", "bootstrap_fraction", "arrivals", "arrival_count", "noise_sigma", "rounds",
                        "sla_min_throughput_factor", "sla_distributability", "estimator"});
        if (s.contains("bootstrap_jobs")) cfg.scenario.bootstrap_jobs = s["bootstrap_jobs"].get<std::vector<std::string>>();
        if (s.contains("bootstrap_fraction")) cfg.scenario.bootstrap_fraction = s["bootstrap_fraction"].get<double>();
        if (s.contains("arrivals")) cfg.scenario.arrivals = s["arrivals"].get<std::vector<std::string>>();
        if (s.contains("arrival_count")) cfg.scenario.arrival_count = s["arrival_count"].get<int>();
        cfg.scenario.noise_sigma = s.value("noise_sigma", cfg.scenario.noise_sigma);
        cfg.scenario.rounds = s.value("rounds", cfg.scenario.rounds);
        cfg.scenario.sla_min_throughput_factor =
            s.value("sla_min_throughput_factor", cfg.scenario.sla_min_throughput_factor);
        cfg.scenario.sla_distributability = s.value("sla_distributability", cfg.scenario.sla_distributability);
        cfg.scenario.estimator = s.value("estimator", cfg.scenario.estimator);
        if (cfg.scenario.estimator != "learned" && cfg.scenario.estimator != "oracle")
            throw std::runtime_error("config: scenario.estimator must be 'learned' or 'oracle'");
    }
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

GroundTruth config_ground_truth(const Config& cfg) {
    if (cfg.dataset.path) return load_table(*cfg.dataset.path);
    if (cfg.dataset.synthetic) return generate_synthetic(*cfg.dataset.synthetic);
    throw std::runtime_error("config: dataset needs either a path or synthetic parameters");
}

std::vector<AcceleratorType> config_accelerators(const Config& cfg, const GroundTruth& gt) {
    std::vector<AcceleratorType> out;
    if (cfg.cluster.accelerators.empty()) {
        out = gt.accelerators();
    } else {
        for (const auto& id : cfg.cluster.accelerators) {
            bool found = false;
            for (const auto& a : gt.accelerators())
                if (a.acc_id == id) {
                    out.push_back(a);
                    found = true;
                }
            if (!found) throw std::runtime_error("config: accelerator '" + id + "' is not in the dataset");
        }
    }
    for (auto& a : out) {
        auto it = cfg.cluster.power.find(a.acc_id);
        if (it == cfg.cluster.power.end()) continue;
        if (it->second.idle) a.power_idle = *it->second.idle;
        if (it->second.per_unit_load) a.power_per_unit_load = *it->second.per_unit_load;
        if (it->second.capacity) a.capacity = *it->second.capacity;
    }
    return out;
}

Scenario config_scenario(const Config& cfg, const GroundTruth& gt) {
    Scenario sc;
    sc.ground_truth = gt;
    sc.accelerators = config_accelerators(cfg, gt);
    for (int s = 0; s < cfg.cluster.servers; ++s) sc.servers.push_back("server" + std::to_string(s));
    sc.noise_sigma = cfg.scenario.noise_sigma;
    sc.sla.min_throughput_factor = cfg.scenario.sla_min_throughput_factor;
    sc.sla.distributability = cfg.scenario.sla_distributability;
    sc.estimator = cfg.scenario.estimator == "oracle" ? EstimatorKind::Oracle : EstimatorKind::Learned;

    std::vector<std::string> all_jobs;
    for (const auto& j : gt.jobs()) all_jobs.push_back(j.job_id);

    if (!cfg.scenario.bootstrap_jobs.empty()) {
        sc.bootstrap_jobs = cfg.scenario.bootstrap_jobs;
        for (const auto& b : sc.bootstrap_jobs)
            if (!gt.has_job(b)) throw std::runtime_error("config: bootstrap job '" + b + "' is not in the dataset");
    } else {
        const double frac = cfg.scenario.bootstrap_fraction.value_or(0.5);
        if (frac < 0.0 || frac > 1.0) throw std::runtime_error("config: bootstrap_fraction must be in [0, 1]");
        std::vector<std::string> shuffled = all_jobs;
        Rng rng(cfg.seed, "bootstrap-selection");
        rng.shuffle(shuffled);
        const size_t n = static_cast<size_t>(frac * static_cast<double>(shuffled.size()));
        sc.bootstrap_jobs.assign(shuffled.begin(), shuffled.begin() + n);
        std::sort(sc.bootstrap_jobs.begin(), sc.bootstrap_jobs.end());
    }

    if (!cfg.scenario.arrivals.empty()) {
        sc.arrivals = cfg.scenario.arrivals;
        for (const auto& a : sc.arrivals)
            if (!gt.has_job(a)) throw std::runtime_error("config: arrival job '" + a + "' is not in the dataset");
    } else {
        std::set<std::string> boot(sc.bootstrap_jobs.begin(), sc.bootstrap_jobs.end());
        std::vector<std::string> rest;
        for (const auto& id : all_jobs)
            if (!boot.count(id)) rest.push_back(id);
        Rng rng(cfg.seed, "arrival-order");
        rng.shuffle(rest);
        size_t n = rest.size();
        if (cfg.scenario.arrival_count) n = std::min(n, static_cast<size_t>(*cfg.scenario.arrival_count));
        sc.arrivals.assign(rest.begin(), rest.begin() + n);
    }
    sc.rounds = cfg.scenario.rounds > 0 ? cfg.scenario.rounds : static_cast<int>(sc.arrivals.size()) + 2;
    return sc;
}

Hyperparams config_hyperparams(const Config& cfg) {
    Hyperparams hp;
    hp.learning_rate = cfg.models.learning_rate;
    hp.epochs = cfg.models.epochs;
    hp.batch_size = cfg.models.batch_size;
    hp.patience = cfg.models.patience;
    hp.shuffle_seed = derive_seed(cfg.seed, "train-shuffle-stream");
    return hp;
}

}  // namespace hetsim
