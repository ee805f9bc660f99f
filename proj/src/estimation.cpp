#include "hetsim/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hetsim/rng.hpp"

namespace hetsim {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

int p1_input_width(const FeatureSchema& schema) {
    return 3 * schema.feature_length() + schema.accelerator_count() + 2;
}

int p2_input_width(const FeatureSchema& schema) {
    return 2 * schema.feature_length() + 2 * schema.accelerator_count() + 6;
}

namespace {

void append(std::vector<double>& v, const std::vector<double>& block) {
    v.insert(v.end(), block.begin(), block.end());
}

void append_onehot(std::vector<double>& v, int index, int size) {
    for (int i = 0; i < size; ++i) v.push_back(i == index ? 1.0 : 0.0);
}

std::vector<JobSpec> select_jobs(const GroundTruth& gt, const std::vector<std::string>& ids) {
    std::vector<JobSpec> out;
    if (ids.empty()) {
        out = gt.jobs();
    } else {
        for (const auto& id : ids) out.push_back(gt.job(id));
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.job_id < b.job_id; });
    }
    return out;
}

}  // namespace

std::vector<Sample> build_p1_samples(const GroundTruth& gt, const P1BuildOptions& opts) {
    const FeatureSchema& schema = gt.schema();
    const std::vector<JobSpec> targets = select_jobs(gt, opts.target_jobs);
    const std::vector<JobSpec> pool = select_jobs(gt, opts.pool_jobs);
    const JobSpec j0 = sentinel_job();
    const FeatureVector zero = encode(j0, schema);

    std::vector<Sample> samples;
    for (const auto& j1 : targets) {
        std::vector<JobSpec> candidates;
        for (const auto& p : pool)
            if (p.job_id != j1.job_id) candidates.push_back(p);
        const auto neighbors = nearest_neighbors(j1, candidates, schema, opts.neighbors);
        const FeatureVector psi1 = encode(j1, schema);

        for (const auto& j2_id : neighbors) {
            const JobSpec& j2 = gt.job(j2_id);
            const FeatureVector psi2 = encode(j2, schema);
            for (int a = 0; a < schema.accelerator_count(); ++a) {
                const std::string& acc = schema.accelerator_ids[a];
                // j3 ranges over the pool plus the empty-slot sentinel
                for (size_t t = 0; t <= pool.size(); ++t) {
                    const bool is_sentinel = t == pool.size();
                    const JobSpec& j3 = is_sentinel ? j0 : pool[t];
                    if (!is_sentinel && (j3.job_id == j1.job_id || j3.job_id == j2.job_id)) continue;

                    const Combination in_combo =
                        is_sentinel ? Combination::solo(j2.job_id) : Combination::pair(j2.job_id, j3.job_id);
                    const Combination out_combo =
                        is_sentinel ? Combination::solo(j1.job_id) : Combination::pair(j1.job_id, j3.job_id);
                    const auto t_j2 = gt.value_opt(acc, j2.job_id, in_combo);
                    const auto t_j3_in = is_sentinel ? std::optional<double>(0.0) : gt.value_opt(acc, j3.job_id, in_combo);
                    const auto t_j1_out = gt.value_opt(acc, j1.job_id, out_combo);
                    const auto t_j3_out =
                        is_sentinel ? std::optional<double>(0.0) : gt.value_opt(acc, j3.job_id, out_combo);
                    if (!t_j2 || !t_j3_in || !t_j1_out || !t_j3_out) continue;  // incomplete table entry

                    Sample s;
                    s.input.reserve(static_cast<size_t>(p1_input_width(schema)));
                    append(s.input, psi2);
                    append(s.input, is_sentinel ? zero : encode(j3, schema));
                    append_onehot(s.input, a, schema.accelerator_count());
                    s.input.push_back(*t_j2);
                    s.input.push_back(*t_j3_in);
                    append(s.input, psi1);
                    s.target = {*t_j1_out, *t_j3_out};
                    samples.push_back(std::move(s));
                }
            }
        }
    }
    return samples;
}

std::vector<Sample> build_p2_samples(const GroundTruth& gt, double estimate_noise_sigma, uint64_t seed,
                                     const P2BuildOptions& opts) {
    if (estimate_noise_sigma < 0.0) throw std::invalid_argument("estimate noise sigma must be >= 0");
    const FeatureSchema& schema = gt.schema();
    const std::vector<JobSpec> pool = select_jobs(gt, opts.pool_jobs);
    std::set<std::string> pool_ids, required;
    for (const auto& j : pool) pool_ids.insert(j.job_id);
    for (const auto& id : opts.require_member) required.insert(id);
    const FeatureVector zero = encode(sentinel_job(), schema);

    Rng rng(seed, "p2-sample-noise");
    auto noisy = [&](double truth) { return clamp01(truth * (1.0 + estimate_noise_sigma * rng.gaussian())); };

    std::vector<Sample> samples;
    for (const auto& combo : gt.combinations()) {
        bool in_pool = true, has_required = required.empty();
        for (const auto& m : combo.members()) {
            if (!pool_ids.count(m)) in_pool = false;
            if (required.count(m)) has_required = true;
        }
        if (!in_pool || !has_required) continue;

        const std::string& j1 = combo.members()[0];
        const bool solo = combo.is_solo();
        const std::string j2 = solo ? std::string() : combo.members()[1];
        const FeatureVector psi1 = encode(gt.job(j1), schema);
        const FeatureVector psi2 = solo ? zero : encode(gt.job(j2), schema);

        for (int a1 = 0; a1 < schema.accelerator_count(); ++a1) {
            for (int a2 = 0; a2 < schema.accelerator_count(); ++a2) {
                if (a1 == a2) continue;
                const std::string& acc1 = schema.accelerator_ids[a1];
                const std::string& acc2 = schema.accelerator_ids[a2];
                const double t1_a1 = gt.value(acc1, j1, combo);
                const double t2_a1 = solo ? 0.0 : gt.value(acc1, j2, combo);
                const double t1_a2 = gt.value(acc2, j1, combo);
                const double t2_a2 = solo ? 0.0 : gt.value(acc2, j2, combo);

                Sample s;
                s.input.reserve(static_cast<size_t>(p2_input_width(schema)));
                append(s.input, psi1);
                append(s.input, psi2);
                append_onehot(s.input, a1, schema.accelerator_count());
                append_onehot(s.input, a2, schema.accelerator_count());
                s.input.push_back(noisy(t1_a1));
                s.input.push_back(solo ? 0.0 : noisy(t2_a1));
                s.input.push_back(t1_a1);
                s.input.push_back(t2_a1);
                s.input.push_back(noisy(t1_a2));
                s.input.push_back(solo ? 0.0 : noisy(t2_a2));
                s.target = {t1_a2, t2_a2};
                samples.push_back(std::move(s));
            }
        }
    }
    return samples;
}

std::vector<InitialEstimate> estimate_initial(const Regressor& p1, Catalog& catalog, const JobSpec& new_job,
                                              const std::vector<std::string>& active_jobs) {
    const FeatureSchema& schema = catalog.schema();
    if (p1.input_size() != p1_input_width(schema))
        throw std::invalid_argument("p1 model width does not match the catalog schema");
    const std::string j2_id = catalog.nearest_job(new_job, {new_job.job_id});
    const JobSpec& j2 = catalog.job(j2_id);
    const FeatureVector psi1 = encode(new_job, schema);
    const FeatureVector psi2 = encode(j2, schema);
    const FeatureVector zero = encode(sentinel_job(), schema);

    std::vector<InitialEstimate> out;
    for (const auto& acc_type : catalog.accelerators()) {
        const std::string& acc = acc_type.acc_id;
        const int a = schema.accelerator_index(acc);
        if (a < 0) throw std::out_of_range("accelerator '" + acc + "' is not in the table schema");
        // the sentinel (solo case) plus each active co-location candidate
        std::vector<std::string> partners = {std::string(kSentinelJobId)};
        for (const auto& id : active_jobs)
            if (id != new_job.job_id && id != kSentinelJobId) partners.push_back(id);

        for (const auto& j3_id : partners) {
            const bool solo_case = j3_id == kSentinelJobId;
            const JobSpec& j3 = solo_case ? sentinel_job() : catalog.job(j3_id);
            // {j2, j3} collapses to j2's solo record when j3 is the sentinel
            // or when the neighbor itself is the active partner
            const Combination in_combo = (solo_case || j3_id == j2_id) ? Combination::solo(j2_id)
                                                                       : Combination::pair(j2_id, j3_id);
            const Combination out_combo = solo_case ? Combination::solo(new_job.job_id)
                                                    : Combination::pair(new_job.job_id, j3_id);

            const auto t_j2 = catalog.lookup_opt(acc, j2_id, in_combo);
            const auto t_j3 = solo_case ? std::optional<double>(0.0)
                                        : (j3_id == j2_id ? t_j2 : catalog.lookup_opt(acc, j3_id, in_combo));

            if (t_j2 && t_j3) {
                std::vector<double> input;
                input.reserve(static_cast<size_t>(p1_input_width(schema)));
                append(input, psi2);
                append(input, solo_case ? zero : encode(j3, schema));
                append_onehot(input, a, schema.accelerator_count());
                input.push_back(*t_j2);
                input.push_back(*t_j3);
                append(input, psi1);
                const auto pred = p1.predict(input);
                const double v1 = clamp01(pred[0]);
                catalog.put_estimate(acc, new_job.job_id, out_combo, v1);
                out.push_back({acc, out_combo, new_job.job_id, v1, false});
                if (!solo_case) {
                    const double v3 = clamp01(pred[1]);
                    catalog.put_estimate(acc, j3_id, out_combo, v3);
                    out.push_back({acc, out_combo, j3_id, v3, false});
                }
            } else {
                // cold start: copy whatever the neighbor knows for the
                // analogous combination, or its solo value as a last resort
                auto copied = catalog.lookup_opt(acc, j2_id, in_combo);
                if (!copied) copied = catalog.lookup_opt(acc, j2_id, Combination::solo(j2_id));
                if (!copied) continue;  // nothing usable on this accelerator
                const double v1 = clamp01(*copied);
                catalog.put_estimate(acc, new_job.job_id, out_combo, v1);
                out.push_back({acc, out_combo, new_job.job_id, v1, true});
                if (!solo_case) {
                    auto partner = catalog.lookup_opt(acc, j3_id, in_combo);
                    if (!partner) partner = catalog.lookup_opt(acc, j3_id, Combination::solo(j3_id));
                    if (partner) {
                        const double v3 = clamp01(*partner);
                        catalog.put_estimate(acc, j3_id, out_combo, v3);
                        out.push_back({acc, out_combo, j3_id, v3, true});
                    }
                }
            }
        }
    }
    return out;
}

RefineResult refine(const Regressor& p2, Catalog& catalog, const RefineInput& input,
                    const std::vector<std::string>& target_accs) {
    const FeatureSchema& schema = catalog.schema();
    if (p2.input_size() != p2_input_width(schema))
        throw std::invalid_argument("p2 model width does not match the catalog schema");
    const int a1 = schema.accelerator_index(input.source_acc);
    if (a1 < 0) throw std::out_of_range("unknown accelerator '" + input.source_acc + "'");

    const std::string& j1 = input.combo.members()[0];
    const bool solo = input.combo.is_solo();
    const std::string j2 = solo ? std::string(kSentinelJobId) : input.combo.members()[1];

    auto measured_of = [&](const std::string& job) {
        auto it = input.measured.find(job);
        if (it == input.measured.end())
            throw std::invalid_argument("refine: no measured value for member " + job);
        return it->second;
    };
    const double m1 = measured_of(j1);
    const double m2 = solo ? 0.0 : measured_of(j2);

    // prior estimates on the source accelerator, before the measurement lands
    const auto prior1_a1 = catalog.estimate_mean(input.source_acc, j1, input.combo);
    const auto prior2_a1 = solo ? std::optional<double>(0.0) : catalog.estimate_mean(input.source_acc, j2, input.combo);

    catalog.record_measurement(input.source_acc, j1, input.combo, m1);
    if (!solo) catalog.record_measurement(input.source_acc, j2, input.combo, m2);

    RefineResult result;
    const FeatureVector psi1 = encode(catalog.job(j1), schema);
    const FeatureVector psi2 = encode(solo ? sentinel_job() : catalog.job(j2), schema);

    for (const auto& acc2 : target_accs) {
        if (acc2 == input.source_acc) continue;
        const int a2 = schema.accelerator_index(acc2);
        if (a2 < 0) {
            result.skipped.push_back({acc2, "unknown accelerator"});
            continue;
        }
        const auto prior1_a2 = catalog.estimate_mean(acc2, j1, input.combo);
        const auto prior2_a2 = solo ? std::optional<double>(0.0) : catalog.estimate_mean(acc2, j2, input.combo);
        if (!prior1_a1 || !prior2_a1 || !prior1_a2 || !prior2_a2) {
            result.skipped.push_back({acc2, "missing prior estimate for " + input.combo.str()});
            continue;
        }

        std::vector<double> in;
        in.reserve(static_cast<size_t>(p2_input_width(schema)));
        append(in, psi1);
        append(in, psi2);
        append_onehot(in, a1, schema.accelerator_count());
        append_onehot(in, a2, schema.accelerator_count());
        in.push_back(*prior1_a1);
        in.push_back(*prior2_a1);
        in.push_back(m1);
        in.push_back(m2);
        in.push_back(*prior1_a2);
        in.push_back(*prior2_a2);
        const auto pred = p2.predict(in);

        const double v1 = clamp01(pred[0]);
        const int i1 = catalog.put_estimate(acc2, j1, input.combo, v1);
        result.appended.push_back({acc2, j1, input.combo, v1, i1});
        if (!solo) {
            const double v2 = clamp01(pred[1]);
            const int i2 = catalog.put_estimate(acc2, j2, input.combo, v2);
            result.appended.push_back({acc2, j2, input.combo, v2, i2});
        }
    }
    return result;
}

double prediction_mae(const Regressor& model, const std::vector<Sample>& samples, bool clamp) {
    if (samples.empty()) return 0.0;
    double ae = 0.0;
    size_t n = 0;
    for (const auto& s : samples) {
        const auto out = model.predict(s.input);
        for (size_t i = 0; i < out.size(); ++i) {
            const double p = clamp ? clamp01(out[i]) : out[i];
            ae += std::abs(p - s.target[i]);
            ++n;
        }
    }
    return ae / static_cast<double>(n);
}

}  // namespace hetsim
