#include "hetsim/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "hetsim/rng.hpp"

namespace hetsim {

namespace {

double scale_to_unit(double value, double lo, double hi) {
    if (value <= 0.0) return 0.0;  // sentinel encodes to zero
    if (hi > lo) {
        const double s = (value - lo) / (hi - lo);
        return std::clamp(s, 0.0, 1.0);
    }
    return 1.0;  // degenerate range: presence indicator, still distinct from the sentinel
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

double parse_double_field(const std::string& s, int line_no, const char* what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw std::runtime_error("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    return v;
}

int parse_int_field(const std::string& s, int line_no, const char* what) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v <= 0)
        throw std::runtime_error("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    return v;
}

constexpr const char* kCsvHeader = "model,batch_size,accelerator,co_model,co_batch_size,throughput_self,throughput_other";

}  // namespace

int FeatureSchema::accelerator_index(const std::string& acc_id) const {
    for (size_t i = 0; i < accelerator_ids.size(); ++i)
        if (accelerator_ids[i] == acc_id) return static_cast<int>(i);
    return -1;
}

FeatureVector encode(const JobSpec& spec, const FeatureSchema& schema) {
    FeatureVector v(schema.feature_length(), 0.0);
    if (spec.is_sentinel) return v;
    auto it = std::find(schema.families.begin(), schema.families.end(), spec.model_family);
    if (it == schema.families.end())
        throw std::invalid_argument("unknown model family '" + spec.model_family + "'");
    v[static_cast<size_t>(it - schema.families.begin())] = 1.0;
    const size_t n = schema.families.size();
    v[n] = scale_to_unit(spec.batch_size > 0 ? std::log2(static_cast<double>(spec.batch_size)) : 0.0,
                         schema.log2_batch_min, schema.log2_batch_max);
    v[n + 1] = scale_to_unit(static_cast<double>(spec.replication), schema.replication_min, schema.replication_max);
    return v;
}

double encoding_distance(const FeatureVector& a, const FeatureVector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("feature vectors of different length");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

std::vector<std::string> nearest_neighbors(const JobSpec& query, const std::vector<JobSpec>& candidates,
                                           const FeatureSchema& schema, int k) {
    const FeatureVector q = encode(query, schema);
    std::vector<std::pair<double, std::string>> ranked;
    ranked.reserve(candidates.size());
    for (const auto& c : candidates) ranked.emplace_back(encoding_distance(q, encode(c, schema)), c.job_id);
    std::sort(ranked.begin(), ranked.end());
    std::vector<std::string> out;
    for (const auto& [d, id] : ranked) {
        if (static_cast<int>(out.size()) >= k) break;
        out.push_back(id);
    }
    return out;
}

const JobSpec& GroundTruth::job(const std::string& job_id) const {
    for (const auto& j : jobs_)
        if (j.job_id == job_id) return j;
    throw std::out_of_range("unknown job '" + job_id + "'");
}

bool GroundTruth::has_job(const std::string& job_id) const {
    for (const auto& j : jobs_)
        if (j.job_id == job_id) return true;
    return false;
}

double GroundTruth::solo_raw(const std::string& acc_id, const std::string& job_id) const {
    auto it = solo_.find({acc_id, job_id});
    if (it == solo_.end()) throw std::out_of_range("no solo entry for (" + acc_id + ", " + job_id + ")");
    return it->second;
}

double GroundTruth::paired_raw(const std::string& acc_id, const std::string& job_id,
                               const std::string& other_id) const {
    const bool first = job_id < other_id;
    auto key = first ? std::make_tuple(acc_id, job_id, other_id) : std::make_tuple(acc_id, other_id, job_id);
    auto it = paired_.find(key);
    if (it == paired_.end())
        throw std::out_of_range("no paired entry for (" + acc_id + ", {" + job_id + "," + other_id + "})");
    return first ? it->second.first : it->second.second;
}

double GroundTruth::value(const std::string& acc_id, const std::string& job_id, const Combination& c) const {
    auto v = value_opt(acc_id, job_id, c);
    if (!v) throw std::out_of_range("no entry for (" + acc_id + ", " + job_id + ", " + c.str() + ")");
    return *v;
}

std::optional<double> GroundTruth::value_opt(const std::string& acc_id, const std::string& job_id,
                                             const Combination& c) const {
    if (!c.contains(job_id)) return std::nullopt;
    if (c.is_solo()) {
        auto it = solo_.find({acc_id, job_id});
        if (it == solo_.end()) return std::nullopt;
        return it->second / normalizer_;
    }
    auto it = paired_.find({acc_id, c.members()[0], c.members()[1]});
    if (it == paired_.end()) return std::nullopt;
    return (c.members()[0] == job_id ? it->second.first : it->second.second) / normalizer_;
}

bool GroundTruth::has(const std::string& acc_id, const std::string& job_id, const Combination& c) const {
    return value_opt(acc_id, job_id, c).has_value();
}

std::vector<Combination> GroundTruth::combinations() const {
    std::vector<Combination> out;
    std::set<std::pair<std::string, std::string>> pair_keys;
    for (const auto& [key, v] : paired_) pair_keys.insert({std::get<1>(key), std::get<2>(key)});
    for (const auto& j : jobs_) out.push_back(Combination::solo(j.job_id));
    for (const auto& [a, b] : pair_keys) out.push_back(Combination::pair(a, b));
    std::sort(out.begin(), out.end());
    return out;
}

void GroundTruth::Builder::add_pair(const std::string& acc, const std::string& j1, double t1,
                                    const std::string& j2, double t2) {
    if (j1 == j2) throw std::invalid_argument("paired entry with identical jobs: " + j1);
    if (j1 < j2)
        paired[{acc, j1, j2}] = {t1, t2};
    else
        paired[{acc, j2, j1}] = {t2, t1};
}

GroundTruth GroundTruth::Builder::finish() && {
    GroundTruth gt;
    gt.accelerators_ = std::move(accelerators);
    gt.jobs_ = std::move(jobs);
    std::sort(gt.accelerators_.begin(), gt.accelerators_.end(),
              [](const auto& a, const auto& b) { return a.acc_id < b.acc_id; });
    std::sort(gt.jobs_.begin(), gt.jobs_.end(), [](const auto& a, const auto& b) { return a.job_id < b.job_id; });
    gt.solo_ = std::move(solo);
    gt.paired_ = std::move(paired);

    if (gt.accelerators_.empty() || gt.jobs_.empty()) throw std::runtime_error("table has no accelerators or no jobs");
    for (const auto& a : gt.accelerators_)
        for (const auto& j : gt.jobs_)
            if (!gt.solo_.count({a.acc_id, j.job_id}))
                throw std::runtime_error("missing solo entry for (" + a.acc_id + ", " + j.job_id + ")");

    double max_raw = 0.0;
    for (const auto& [k, v] : gt.solo_) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw std::runtime_error("negative or non-finite throughput in table");
        max_raw = std::max(max_raw, v);
    }
    for (const auto& [k, v] : gt.paired_) {
        if (!(v.first >= 0.0) || !(v.second >= 0.0) || !std::isfinite(v.first) || !std::isfinite(v.second))
            throw std::runtime_error("negative or non-finite throughput in table");
        max_raw = std::max({max_raw, v.first, v.second});
        // co-location never helps; real tables occasionally violate this, so warn only
        const auto& [acc, j1, j2] = k;
        auto s1 = gt.solo_.find({acc, j1});
        auto s2 = gt.solo_.find({acc, j2});
        if (s1 != gt.solo_.end() && v.first > s1->second)
            std::cerr << "warning: paired throughput of " << j1 << " on " << acc << " exceeds its solo throughput\n";
        if (s2 != gt.solo_.end() && v.second > s2->second)
            std::cerr << "warning: paired throughput of " << j2 << " on " << acc << " exceeds its solo throughput\n";
    }
    if (max_raw <= 0.0) throw std::runtime_error("table has no positive throughput");
    gt.normalizer_ = max_raw;

    std::set<std::string> fams;
    double bmin = std::numeric_limits<double>::infinity(), bmax = -std::numeric_limits<double>::infinity();
    double rmin = std::numeric_limits<double>::infinity(), rmax = -std::numeric_limits<double>::infinity();
    for (const auto& j : gt.jobs_) {
        fams.insert(j.model_family);
        const double lb = std::log2(static_cast<double>(j.batch_size));
        bmin = std::min(bmin, lb);
        bmax = std::max(bmax, lb);
        rmin = std::min(rmin, static_cast<double>(j.replication));
        rmax = std::max(rmax, static_cast<double>(j.replication));
    }
    gt.schema_.families.assign(fams.begin(), fams.end());
    gt.schema_.log2_batch_min = bmin;
    gt.schema_.log2_batch_max = bmax;
    gt.schema_.replication_min = rmin;
    gt.schema_.replication_max = rmax;
    for (const auto& a : gt.accelerators_) gt.schema_.accelerator_ids.push_back(a.acc_id);
    return gt;
}

GroundTruth generate_synthetic(const SyntheticSpec& spec) {
    if (spec.accelerators < 1 || spec.families < 1 || spec.batches_per_family < 1)
        throw std::invalid_argument("synthetic table needs at least one accelerator, family, and batch");
    if (spec.interference < 0.0 || spec.interference > 1.0)
        throw std::invalid_argument("interference must be in [0, 1]");
    if (spec.speed_base <= 0.0) throw std::invalid_argument("speed_base must be positive");

    GroundTruth::Builder b;
    std::vector<double> speeds(spec.accelerators);
    double speed = 1.0;
    for (int i = 0; i < spec.accelerators; ++i) {
        speeds[i] = speed;
        speed *= spec.speed_base;
        AcceleratorType acc;
        char id[16];
        std::snprintf(id, sizeof(id), "acc%02d", i);
        acc.acc_id = id;
        acc.name = std::string("synthetic class ") + std::to_string(i);
        acc.capacity = 2;
        // plausible class-scaled affine power: faster classes idle and draw more
        acc.power_idle = 50.0 * (1.0 + 0.2 * i);
        acc.power_per_unit_load = std::min(125.0, 50.0 + 25.0 * i);
        b.accelerators.push_back(acc);
    }

    Rng rng(spec.seed, "synthetic-family-base");
    std::vector<double> family_base(spec.families);
    for (int f = 0; f < spec.families; ++f) family_base[f] = rng.uniform(0.55, 0.95);

    for (int f = 0; f < spec.families; ++f) {
        for (int k = 0; k < spec.batches_per_family; ++k) {
            JobSpec j;
            j.model_family = "synthetic-" + std::to_string(f);
            j.batch_size = 16 << k;
            j.replication = 1;
            j.job_id = default_job_id(j.model_family, j.batch_size);
            b.jobs.push_back(j);
        }
    }

    // schema for the contention encodings, same derivation as finish()
    FeatureSchema schema;
    {
        std::set<std::string> fams;
        for (const auto& j : b.jobs) fams.insert(j.model_family);
        schema.families.assign(fams.begin(), fams.end());
        schema.log2_batch_min = 4.0;  // batch 16
        schema.log2_batch_max = std::log2(static_cast<double>(16 << (spec.batches_per_family - 1)));
        schema.replication_min = 1.0;
        schema.replication_max = 1.0;
    }

    auto family_index = [&](const JobSpec& j) {
        return std::stoi(j.model_family.substr(j.model_family.rfind('-') + 1));
    };
    auto batch_index = [&](const JobSpec& j) {
        int k = 0;
        for (int bs = 16; bs < j.batch_size; bs <<= 1) ++k;
        return k;
    };

    const double raw_scale = 100.0;  // plausible iterations/second magnitude
    for (int a = 0; a < spec.accelerators; ++a) {
        const std::string& acc_id = b.accelerators[a].acc_id;
        for (const auto& j : b.jobs) {
            const double curve = 1.0 / (1.0 + 0.4 * batch_index(j));
            b.solo[{acc_id, j.job_id}] = family_base[family_index(j)] * speeds[a] * curve * raw_scale;
        }
    }
    for (int a = 0; a < spec.accelerators; ++a) {
        const std::string& acc_id = b.accelerators[a].acc_id;
        for (size_t i = 0; i < b.jobs.size(); ++i) {
            for (size_t l = i + 1; l < b.jobs.size(); ++l) {
                const auto e1 = encode(b.jobs[i], schema);
                const auto e2 = encode(b.jobs[l], schema);
                double dot = 0.0, n1 = 0.0, n2 = 0.0;
                for (size_t t = 0; t < e1.size(); ++t) {
                    dot += e1[t] * e2[t];
                    n1 += e1[t] * e1[t];
                    n2 += e2[t] * e2[t];
                }
                const double cosine = (n1 > 0.0 && n2 > 0.0) ? dot / std::sqrt(n1 * n2) : 0.0;
                const double contention = 0.5 * (1.0 + cosine);
                const double keep = 1.0 - spec.interference * contention;
                b.add_pair(acc_id, b.jobs[i].job_id, b.solo[{acc_id, b.jobs[i].job_id}] * keep,
                           b.jobs[l].job_id, b.solo[{acc_id, b.jobs[l].job_id}] * keep);
            }
        }
    }
    return std::move(b).finish();
}

GroundTruth load_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open table file '" + path + "'");
    return load_table(in, path);
}

GroundTruth load_table(std::istream& in, const std::string& origin) {
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line)) throw std::runtime_error(origin + ": empty table file");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader)
        throw std::runtime_error(origin + ": line 1: expected header '" + std::string(kCsvHeader) + "'");

    GroundTruth::Builder b;
    std::set<std::string> acc_ids;
    std::map<std::string, JobSpec> jobs;
    auto note_job = [&](const std::string& family, int batch, int line_no_) {
        JobSpec j;
        j.model_family = family;
        j.batch_size = batch;
        j.replication = 1;
        j.job_id = default_job_id(family, batch);
        auto it = jobs.find(j.job_id);
        if (it == jobs.end()) jobs[j.job_id] = j;
        (void)line_no_;
        return j.job_id;
    };

    bool any_row = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                f.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        f.push_back(cur);
        if (f.size() != 7)
            throw std::runtime_error(origin + ": line " + std::to_string(line_no) + ": expected 7 fields, got " +
                                     std::to_string(f.size()));
        if (f[0].empty() || f[1].empty() || f[2].empty())
            throw std::runtime_error(origin + ": line " + std::to_string(line_no) + ": model, batch_size and accelerator are required");

        const std::string family = f[0];
        const int batch = parse_int_field(f[1], line_no, "batch_size");
        const std::string acc = f[2];
        acc_ids.insert(acc);
        const std::string job_id = note_job(family, batch, line_no);
        const bool is_solo = f[3].empty();
        if (is_solo) {
            if (!f[4].empty() || !f[6].empty())
                throw std::runtime_error(origin + ": line " + std::to_string(line_no) +
                                         ": solo row must leave co_batch_size and throughput_other empty");
            const double t = parse_double_field(f[5], line_no, "throughput_self");
            if (b.solo.count({acc, job_id}))
                throw std::runtime_error(origin + ": line " + std::to_string(line_no) + ": duplicate solo entry for (" +
                                         acc + ", " + job_id + ")");
            b.solo[{acc, job_id}] = t;
        } else {
            const int co_batch = parse_int_field(f[4], line_no, "co_batch_size");
            const std::string co_id = note_job(f[3], co_batch, line_no);
            if (co_id == job_id)
                throw std::runtime_error(origin + ": line " + std::to_string(line_no) + ": job co-located with itself");
            const double t_self = parse_double_field(f[5], line_no, "throughput_self");
            const double t_other = parse_double_field(f[6], line_no, "throughput_other");
            auto key = job_id < co_id ? std::make_tuple(acc, job_id, co_id) : std::make_tuple(acc, co_id, job_id);
            if (b.paired.count(key))
                throw std::runtime_error(origin + ": line " + std::to_string(line_no) + ": duplicate paired entry for (" +
                                         acc + ", {" + job_id + "," + co_id + "})");
            b.add_pair(acc, job_id, t_self, co_id, t_other);
        }
        any_row = true;
    }
    if (!any_row) throw std::runtime_error(origin + ": table has no data rows");

    for (const auto& id : acc_ids) {
        AcceleratorType a;
        a.acc_id = id;
        a.name = id;
        a.capacity = 2;
        b.accelerators.push_back(a);
    }
    for (auto& [id, j] : jobs) b.jobs.push_back(j);
    return std::move(b).finish();
}

void save_table(const GroundTruth& gt, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    save_table(gt, out);
}

void save_table(const GroundTruth& gt, std::ostream& out) {
    out << kCsvHeader << "\n";
    for (const auto& acc : gt.accelerators())
        for (const auto& j : gt.jobs())
            out << j.model_family << ',' << j.batch_size << ',' << acc.acc_id << ",,,"
                << format_double(gt.solo_raw(acc.acc_id, j.job_id)) << ",\n";
    for (const auto& acc : gt.accelerators()) {
        for (const auto& c : gt.combinations()) {
            if (c.is_solo() || !gt.has(acc.acc_id, c.members()[0], c)) continue;
            const JobSpec& j1 = gt.job(c.members()[0]);
            const JobSpec& j2 = gt.job(c.members()[1]);
            out << j1.model_family << ',' << j1.batch_size << ',' << acc.acc_id << ',' << j2.model_family << ','
                << j2.batch_size << ',' << format_double(gt.paired_raw(acc.acc_id, j1.job_id, j2.job_id)) << ','
                << format_double(gt.paired_raw(acc.acc_id, j2.job_id, j1.job_id)) << "\n";
        }
    }
}

JobSplit split_jobs(const GroundTruth& gt, double train_frac, double val_frac, uint64_t seed) {
    if (train_frac <= 0.0 || val_frac <= 0.0 || train_frac + val_frac > 1.0)
        throw std::invalid_argument("fractions must be positive and sum to at most 1");
    std::vector<std::string> ids;
    for (const auto& j : gt.jobs()) ids.push_back(j.job_id);
    Rng rng(seed, "job-split");
    rng.shuffle(ids);
    const size_t n = ids.size();
    const size_t n_train = std::max<size_t>(1, static_cast<size_t>(train_frac * n));
    const size_t n_val = std::max<size_t>(1, static_cast<size_t>(val_frac * n));
    if (n_train + n_val >= n)
        throw std::invalid_argument("too few jobs (" + std::to_string(n) + ") to populate train/val/test");
    JobSplit s;
    s.train.assign(ids.begin(), ids.begin() + n_train);
    s.val.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
    s.test.assign(ids.begin() + n_train + n_val, ids.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.val.begin(), s.val.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

}  // namespace hetsim
