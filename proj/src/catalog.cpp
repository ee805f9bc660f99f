#include "hetsim/catalog.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace hetsim {

namespace {

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

double parse_double(const std::string& s, int line_no) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw std::runtime_error("snapshot line " + std::to_string(line_no) + ": bad number '" + s + "'");
    return v;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

Catalog::Catalog(FeatureSchema schema, std::vector<AcceleratorType> accelerators)
    : schema_(std::move(schema)), accelerators_(std::move(accelerators)) {
    std::sort(accelerators_.begin(), accelerators_.end(),
              [](const auto& a, const auto& b) { return a.acc_id < b.acc_id; });
    for (const auto& a : accelerators_) {
        if (a.capacity < 1 || a.capacity > 2)
            throw std::invalid_argument("accelerator " + a.acc_id + " capacity must be 1 or 2");
        if (a.power_idle < 0.0 || a.power_per_unit_load < 0.0)
            throw std::invalid_argument("accelerator " + a.acc_id + " has negative power parameters");
    }
    const JobSpec j0 = sentinel_job();
    jobs_[j0.job_id] = j0;
}

bool Catalog::has_accelerator(const std::string& acc_id) const {
    for (const auto& a : accelerators_)
        if (a.acc_id == acc_id) return true;
    return false;
}

std::string Catalog::register_job(JobSpec spec) {
    if (spec.job_id.empty()) spec.job_id = default_job_id(spec.model_family, spec.batch_size);
    if (jobs_.count(spec.job_id)) throw std::invalid_argument("duplicate job id '" + spec.job_id + "'");
    if (!spec.is_sentinel) {
        if (spec.batch_size < 1) throw std::invalid_argument("job " + spec.job_id + ": batch_size must be >= 1");
        if (spec.replication < 1) throw std::invalid_argument("job " + spec.job_id + ": replication must be >= 1");
        if (spec.min_throughput < 0.0)
            throw std::invalid_argument("job " + spec.job_id + ": min_throughput must be >= 0");
    }
    const std::string id = spec.job_id;
    jobs_[id] = std::move(spec);
    return id;
}

bool Catalog::has_job(const std::string& job_id) const { return jobs_.count(job_id) > 0; }

const JobSpec& Catalog::job(const std::string& job_id) const { return require_job(job_id); }

const JobSpec& Catalog::require_job(const std::string& job_id) const {
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) throw std::out_of_range("unknown job '" + job_id + "'");
    return it->second;
}

std::vector<std::string> Catalog::job_ids() const {
    std::vector<std::string> ids;
    ids.reserve(jobs_.size());
    for (const auto& [id, j] : jobs_) ids.push_back(id);
    return ids;
}

std::string Catalog::nearest_job(const JobSpec& query, const std::set<std::string>& exclude) const {
    const FeatureVector q = encode(query, schema_);
    std::string best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& [id, j] : jobs_) {
        if (j.is_sentinel || exclude.count(id)) continue;
        const double d = encoding_distance(q, encode(j, schema_));
        if (d < best_d || (d == best_d && (best.empty() || id < best))) {
            best_d = d;
            best = id;
        }
    }
    if (best.empty()) throw std::runtime_error("catalog has no candidate jobs for nearest_job");
    return best;
}

void Catalog::validate_entry(const std::string& acc_id, const std::string& job_id, const Combination& combo,
                             double value) const {
    if (!(value >= 0.0) || !std::isfinite(value))
        throw std::invalid_argument("throughput value must be finite and >= 0, got " + format_double(value));
    if (!has_accelerator(acc_id)) throw std::out_of_range("unknown accelerator '" + acc_id + "'");
    require_job(job_id);
    for (const auto& m : combo.members()) require_job(m);
    if (!combo.contains(job_id))
        throw std::invalid_argument("job " + job_id + " is not a member of " + combo.str());
    if (job_id == kSentinelJobId)
        throw std::invalid_argument("the sentinel job has defined-zero throughput; records are not stored for it");
}

int Catalog::put_estimate(const std::string& acc_id, const std::string& job_id, const Combination& combo,
                          double value) {
    validate_entry(acc_id, job_id, combo, value);
    EstimateRecord& rec = records_[{acc_id, job_id, combo}];
    if (rec.acc_id.empty()) {
        rec.acc_id = acc_id;
        rec.job_id = job_id;
        rec.combo = combo;
    }
    rec.refinement_set.push_back(value);
    return static_cast<int>(rec.refinement_set.size()) - 1;
}

void Catalog::record_measurement(const std::string& acc_id, const std::string& job_id, const Combination& combo,
                                 double value) {
    validate_entry(acc_id, job_id, combo, value);
    EstimateRecord& rec = records_[{acc_id, job_id, combo}];
    if (rec.acc_id.empty()) {
        rec.acc_id = acc_id;
        rec.job_id = job_id;
        rec.combo = combo;
    }
    rec.measurement = value;
}

const EstimateRecord* Catalog::find(const std::string& acc_id, const std::string& job_id,
                                    const Combination& combo) const {
    auto it = records_.find({acc_id, job_id, combo});
    return it == records_.end() ? nullptr : &it->second;
}

std::optional<double> Catalog::lookup_opt(const std::string& acc_id, const std::string& job_id,
                                          const Combination& combo) const {
    if (job_id == kSentinelJobId) return 0.0;
    const EstimateRecord* rec = find(acc_id, job_id, combo);
    if (!rec) return std::nullopt;
    if (rec->measurement) return *rec->measurement;
    if (rec->refinement_set.empty()) return std::nullopt;
    double s = 0.0;
    for (double v : rec->refinement_set) s += v;
    return s / static_cast<double>(rec->refinement_set.size());
}

double Catalog::lookup(const std::string& acc_id, const std::string& job_id, const Combination& combo) const {
    auto v = lookup_opt(acc_id, job_id, combo);
    if (!v) throw std::out_of_range("no record for (" + acc_id + ", " + job_id + ", " + combo.str() + ")");
    return *v;
}

std::optional<double> Catalog::estimate_mean(const std::string& acc_id, const std::string& job_id,
                                             const Combination& combo) const {
    if (job_id == kSentinelJobId) return 0.0;
    const EstimateRecord* rec = find(acc_id, job_id, combo);
    if (!rec || rec->refinement_set.empty()) return std::nullopt;
    double s = 0.0;
    for (double v : rec->refinement_set) s += v;
    return s / static_cast<double>(rec->refinement_set.size());
}

bool Catalog::has_record(const std::string& acc_id, const std::string& job_id, const Combination& combo) const {
    return find(acc_id, job_id, combo) != nullptr;
}

bool Catalog::has_measurement(const std::string& acc_id, const std::string& job_id, const Combination& combo) const {
    const EstimateRecord* rec = find(acc_id, job_id, combo);
    return rec && rec->measurement.has_value();
}

std::vector<const EstimateRecord*> Catalog::records() const {
    std::vector<const EstimateRecord*> out;
    out.reserve(records_.size());
    for (const auto& [k, rec] : records_) out.push_back(&rec);
    return out;
}

void Catalog::export_snapshot(std::ostream& out) const {
    for (const auto& [key, rec] : records_) {
        out << rec.acc_id << '\t' << rec.job_id << '\t';
        const auto& m = rec.combo.members();
        out << m[0];
        if (m.size() == 2) out << ',' << m[1];
        out << '\t';
        for (size_t i = 0; i < rec.refinement_set.size(); ++i) {
            if (i) out << ',';
            out << format_double(rec.refinement_set[i]);
        }
        out << '\t';
        if (rec.measurement) out << format_double(*rec.measurement);
        out << '\n';
    }
}

void Catalog::export_snapshot(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    export_snapshot(out);
}

void Catalog::import_snapshot(std::istream& in) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto f = split_on(line, '\t');
        if (f.size() != 5)
            throw std::runtime_error("snapshot line " + std::to_string(line_no) + ": expected 5 fields, got " +
                                     std::to_string(f.size()));
        const Combination combo = Combination::of(split_on(f[2], ','));
        if (records_.count({f[0], f[1], combo}))
            throw std::runtime_error("snapshot line " + std::to_string(line_no) + ": duplicate record");
        std::vector<double> values;
        if (!f[3].empty())
            for (const auto& s : split_on(f[3], ',')) values.push_back(parse_double(s, line_no));
        std::optional<double> measurement;
        if (!f[4].empty()) measurement = parse_double(f[4], line_no);

        const double probe = values.empty() ? (measurement ? *measurement : 0.0) : values.front();
        validate_entry(f[0], f[1], combo, probe);
        EstimateRecord rec;
        rec.acc_id = f[0];
        rec.job_id = f[1];
        rec.combo = combo;
        for (double v : values)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::runtime_error("snapshot line " + std::to_string(line_no) + ": negative value");
        if (measurement && (!(*measurement >= 0.0) || !std::isfinite(*measurement)))
            throw std::runtime_error("snapshot line " + std::to_string(line_no) + ": negative measurement");
        rec.refinement_set = std::move(values);
        rec.measurement = measurement;
        records_[{rec.acc_id, rec.job_id, rec.combo}] = std::move(rec);
    }
}

void Catalog::import_snapshot(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open snapshot '" + path + "'");
    import_snapshot(in);
}

}  // namespace hetsim
