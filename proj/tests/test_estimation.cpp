#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hetsim/estimation.hpp"
#include "hetsim/rng.hpp"
#include "hetsim/training.hpp"
#include "support.hpp"

using namespace hetsim;

namespace {

// two jobs, one accelerator, solo entries only
GroundTruth tiny_solo_table() {
    GroundTruth::Builder b;
    AcceleratorType acc;
    acc.acc_id = "a0";
    acc.name = "a0";
    b.accelerators.push_back(acc);
    for (int f = 0; f < 2; ++f) {
        JobSpec j;
        j.model_family = "fam" + std::to_string(f);
        j.batch_size = 16;
        j.replication = 1;
        j.job_id = default_job_id(j.model_family, j.batch_size);
        b.jobs.push_back(j);
        b.solo[{"a0", j.job_id}] = 10.0 + f;
    }
    return std::move(b).finish();
}

GroundTruth small_synthetic(int accs = 6) {
    SyntheticSpec spec;
    spec.accelerators = accs;
    spec.families = 2;
    spec.batches_per_family = 2;
    spec.interference = 0.2;
    spec.seed = 3;
    return generate_synthetic(spec);
}

}  // namespace

TEST_CASE("input widths follow the schema") {
    const GroundTruth gt = small_synthetic(3);
    const FeatureSchema& s = gt.schema();
    CHECK(p1_input_width(s) == 3 * s.feature_length() + 3 + 2);
    CHECK(p2_input_width(s) == 2 * s.feature_length() + 2 * 3 + 6);
}

TEST_CASE("p1 samples: two jobs, one accelerator, solo-only gives exactly two samples") {
    const GroundTruth gt = tiny_solo_table();
    const auto samples = build_p1_samples(gt);
    REQUIRE(samples.size() == 2);  // each job once, sentinel partner only

    const FeatureSchema& schema = gt.schema();
    const size_t F = static_cast<size_t>(schema.feature_length());
    for (const auto& s : samples) {
        REQUIRE(s.input.size() == static_cast<size_t>(p1_input_width(schema)));
        // the sentinel partner block and its throughput slot are zero
        for (size_t i = F; i < 2 * F; ++i) CHECK(s.input[i] == 0.0);
        CHECK(s.input[2 * F] == 1.0);          // single accelerator one-hot
        CHECK(s.input[2 * F + 2] == 0.0);      // T of the sentinel
        CHECK(s.target.size() == 2);
        CHECK(s.target[1] == 0.0);             // sentinel output throughput
    }
    // targets are the normalized solo values of the target jobs
    std::vector<double> targets = {samples[0].target[0], samples[1].target[0]};
    std::sort(targets.begin(), targets.end());
    const double t0 = gt.value("a0", "fam0-16", Combination::solo("fam0-16"));
    const double t1 = gt.value("a0", "fam1-16", Combination::solo("fam1-16"));
    CHECK(targets == std::vector<double>{std::min(t0, t1), std::max(t0, t1)});
}

TEST_CASE("p1 samples: a single-job table yields no samples") {
    GroundTruth::Builder b;
    AcceleratorType acc;
    acc.acc_id = "a0";
    b.accelerators.push_back(acc);
    JobSpec j;
    j.model_family = "fam0";
    j.batch_size = 16;
    j.replication = 1;
    j.job_id = "fam0-16";
    b.jobs.push_back(j);
    b.solo[{"a0", "fam0-16"}] = 5.0;
    const GroundTruth gt = std::move(b).finish();
    CHECK(build_p1_samples(gt).empty());
}

TEST_CASE("p1 samples: targets never leak into inputs and neighbor pools are honored") {
    const GroundTruth gt = small_synthetic(2);
    P1BuildOptions opts;
    opts.neighbors = 2;
    opts.target_jobs = {"synthetic-0-16"};
    opts.pool_jobs = {"synthetic-0-32", "synthetic-1-16"};
    const auto samples = build_p1_samples(gt, opts);
    CHECK(!samples.empty());
    // with 2 pool jobs: j2 has 2 choices, j3 is the other pool job or the
    // sentinel, per accelerator
    CHECK(samples.size() == 2u * 2u * 2u);
}

TEST_CASE("p2 samples: one per combination and ordered accelerator pair, deterministic") {
    const GroundTruth gt = small_synthetic(3);
    const auto s1 = build_p2_samples(gt, 0.1, 77);
    const auto s2 = build_p2_samples(gt, 0.1, 77);
    REQUIRE(s1.size() == s2.size());
    for (size_t i = 0; i < s1.size(); ++i) {
        CHECK(s1[i].input == s2[i].input);
        CHECK(s1[i].target == s2[i].target);
    }
    const size_t combos = gt.combinations().size();
    CHECK(s1.size() == combos * 3 * 2);  // ordered accelerator pairs

    for (const auto& s : s1) {
        REQUIRE(s.input.size() == static_cast<size_t>(p2_input_width(gt.schema())));
        for (double v : s.input) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
    CHECK_THROWS_AS(build_p2_samples(gt, -0.1, 1), std::invalid_argument);
}

TEST_CASE("estimate_initial: enumeration counts across accelerators and partners") {
    const GroundTruth gt = small_synthetic(6);
    Catalog catalog(gt.schema(), gt.accelerators());
    const std::string w = "synthetic-0-16";
    const std::string n = "synthetic-0-32";
    catalog.register_job(gt.job(w));
    catalog.register_job(gt.job(n));
    for (const auto& a : gt.accelerators())
        catalog.record_measurement(a.acc_id, w, Combination::solo(w), gt.value(a.acc_id, w, Combination::solo(w)));

    const Regressor p1({p1_input_width(gt.schema()), 8, 2}, 5);

    SUBCASE("one active job gives solo plus pair per accelerator") {
        const auto rows = estimate_initial(p1, catalog, gt.job(n), {w});
        int for_new = 0, for_partner = 0;
        for (const auto& r : rows) {
            CHECK(r.value >= 0.0);
            CHECK(r.value <= 1.0);
            if (r.job_id == n) ++for_new;
            if (r.job_id == w) ++for_partner;
        }
        CHECK(for_new == 12);      // 6 accelerators x {solo, pair}
        CHECK(for_partner == 6);   // co-effect on the partner
        CHECK(catalog.has_record("acc00", n, Combination::solo(n)));
        CHECK(catalog.has_record("acc00", n, Combination::pair(n, w)));
        CHECK(catalog.has_record("acc00", w, Combination::pair(n, w)));
    }
    SUBCASE("no active jobs gives solo estimates only") {
        const auto rows = estimate_initial(p1, catalog, gt.job(n), {});
        CHECK(rows.size() == 6);
        for (const auto& r : rows) {
            CHECK(r.combo == Combination::solo(n));
            CHECK(r.job_id == n);
        }
    }
    SUBCASE("estimates land at refinement-set index zero") {
        estimate_initial(p1, catalog, gt.job(n), {w});
        const EstimateRecord* rec = catalog.find("acc03", n, Combination::solo(n));
        REQUIRE(rec != nullptr);
        CHECK(rec->refinement_set.size() == 1);
    }
}

TEST_CASE("estimate_initial: missing neighbor pair records fall back to copying") {
    const GroundTruth gt = small_synthetic(2);
    Catalog catalog(gt.schema(), gt.accelerators());
    const std::string w = "synthetic-0-16";   // neighbor (same family as the new job)
    const std::string x = "synthetic-1-16";   // active job, no pair records with w
    const std::string n = "synthetic-0-32";
    for (const auto& id : {w, x, n}) catalog.register_job(gt.job(id));
    for (const auto& a : gt.accelerators()) {
        catalog.record_measurement(a.acc_id, w, Combination::solo(w), gt.value(a.acc_id, w, Combination::solo(w)));
        catalog.record_measurement(a.acc_id, x, Combination::solo(x), gt.value(a.acc_id, x, Combination::solo(x)));
    }

    const Regressor p1({p1_input_width(gt.schema()), 8, 2}, 5);
    const auto rows = estimate_initial(p1, catalog, gt.job(n), {x});
    int fallbacks = 0, model_rows = 0;
    for (const auto& r : rows) (r.fallback ? fallbacks : model_rows)++;
    CHECK(model_rows == 2);  // solo case per accelerator still runs the model
    CHECK(fallbacks == 4);   // pair rows for the new job and the partner, both accelerators
    for (const auto& r : rows)
        if (r.fallback && r.job_id == n)
            CHECK(r.value == gt.value(r.acc_id, w, Combination::solo(w)));  // copied from the neighbor
}

TEST_CASE("estimate_initial: cold catalog with no usable records yields nothing for that accelerator") {
    const GroundTruth gt = small_synthetic(2);
    Catalog catalog(gt.schema(), gt.accelerators());
    catalog.register_job(gt.job("synthetic-0-16"));
    catalog.register_job(gt.job("synthetic-0-32"));
    const Regressor p1({p1_input_width(gt.schema()), 8, 2}, 5);
    const auto rows = estimate_initial(p1, catalog, gt.job("synthetic-0-32"), {});
    CHECK(rows.empty());
}

TEST_CASE("refine: counts, no-op target, and untouched accelerators") {
    const GroundTruth gt = small_synthetic(6);
    Catalog catalog(gt.schema(), gt.accelerators());
    const std::string j1 = "synthetic-0-16";
    const std::string j2 = "synthetic-1-16";
    catalog.register_job(gt.job(j1));
    catalog.register_job(gt.job(j2));
    const Combination solo = Combination::solo(j1);
    const Combination pair = Combination::pair(j1, j2);
    for (const auto& a : gt.accelerators()) {
        catalog.put_estimate(a.acc_id, j1, solo, 0.4);
        catalog.put_estimate(a.acc_id, j1, pair, 0.3);
        catalog.put_estimate(a.acc_id, j2, pair, 0.2);
    }
    const Regressor p2({p2_input_width(gt.schema()), 8, 2}, 6);
    std::vector<std::string> all_accs;
    for (const auto& a : gt.accelerators()) all_accs.push_back(a.acc_id);

    SUBCASE("solo measurement propagates to the five other types") {
        RefineInput in{"acc00", solo, {{j1, 0.45}}};
        const auto res = refine(p2, catalog, in, all_accs);
        CHECK(res.appended.size() == 5);
        CHECK(res.skipped.empty());
        CHECK(catalog.has_measurement("acc00", j1, solo));
        CHECK(catalog.lookup("acc00", j1, solo) == 0.45);
        for (const auto& app : res.appended) {
            CHECK(app.round_index == 1);  // appended after the initial estimate
            CHECK(app.value >= 0.0);
            CHECK(app.value <= 1.0);
        }
    }
    SUBCASE("pair measurement updates both members on the target") {
        RefineInput in{"acc00", pair, {{j1, 0.31}, {j2, 0.19}}};
        const auto res = refine(p2, catalog, in, {"acc01"});
        REQUIRE(res.appended.size() == 2);
        std::vector<std::string> jobs = {res.appended[0].job_id, res.appended[1].job_id};
        std::sort(jobs.begin(), jobs.end());
        CHECK(jobs == std::vector<std::string>{j1, j2});
        CHECK(res.appended[0].acc_id == "acc01");
    }
    SUBCASE("the source accelerator alone is a no-op refinement") {
        RefineInput in{"acc00", solo, {{j1, 0.45}}};
        const auto res = refine(p2, catalog, in, {"acc00"});
        CHECK(res.appended.empty());
        CHECK(res.skipped.empty());
        CHECK(catalog.has_measurement("acc00", j1, solo));  // measurement still lands
    }
    SUBCASE("accelerators outside the target set keep their records bit-identical") {
        std::ostringstream before;
        catalog.export_snapshot(before);
        RefineInput in{"acc00", solo, {{j1, 0.45}}};
        refine(p2, catalog, in, {"acc01", "acc02"});
        std::ostringstream after;
        catalog.export_snapshot(after);
        auto lines_of = [](const std::string& text, const std::string& acc) {
            std::vector<std::string> out;
            std::istringstream in2(text);
            std::string line;
            while (std::getline(in2, line))
                if (line.rfind(acc + "\t", 0) == 0) out.push_back(line);
            return out;
        };
        for (const auto& acc : {"acc03", "acc04", "acc05"})
            CHECK(lines_of(before.str(), acc) == lines_of(after.str(), acc));
        CHECK(lines_of(before.str(), "acc01") != lines_of(after.str(), "acc01"));
    }
}

TEST_CASE("refine: targets without prior estimates are skipped and reported") {
    const GroundTruth gt = small_synthetic(3);
    Catalog catalog(gt.schema(), gt.accelerators());
    const std::string j1 = "synthetic-0-16";
    catalog.register_job(gt.job(j1));
    const Combination solo = Combination::solo(j1);
    catalog.put_estimate("acc00", j1, solo, 0.4);
    catalog.put_estimate("acc01", j1, solo, 0.5);
    // acc02 has no prior

    const Regressor p2({p2_input_width(gt.schema()), 8, 2}, 6);
    RefineInput in{"acc00", solo, {{j1, 0.42}}};
    const auto res = refine(p2, catalog, in, {"acc01", "acc02"});
    CHECK(res.appended.size() == 1);
    REQUIRE(res.skipped.size() == 1);
    CHECK(res.skipped[0].acc_id == "acc02");
}

TEST_CASE("one refinement round does not hurt estimate quality on clean synthetic truth") {
    SyntheticSpec spec;
    spec.accelerators = 2;
    spec.families = 3;
    spec.batches_per_family = 2;
    spec.interference = 0.3;
    spec.seed = 21;
    const GroundTruth gt = generate_synthetic(spec);

    std::vector<std::string> jobs;
    for (const auto& j : gt.jobs()) jobs.push_back(j.job_id);
    const std::string held_out = jobs.back();
    jobs.pop_back();
    JobSplit split;
    split.train.assign(jobs.begin(), jobs.begin() + 4);
    split.val.assign(jobs.begin() + 4, jobs.end());

    ModelConfig mc;
    mc.hidden = {16, 16};
    mc.epochs = 150;
    mc.patience = 30;
    const TrainedModels models = train_models(gt, mc, split, 12);

    Catalog catalog(gt.schema(), gt.accelerators());
    for (const auto& id : jobs) catalog.register_job(gt.job(id));
    for (const auto& id : jobs)
        for (const auto& a : gt.accelerators())
            catalog.record_measurement(a.acc_id, id, Combination::solo(id),
                                       gt.value(a.acc_id, id, Combination::solo(id)));
    catalog.register_job(gt.job(held_out));
    estimate_initial(models.p1, catalog, gt.job(held_out), {});

    auto estimate_only_mae = [&]() {
        double ae = 0.0;
        int n = 0;
        for (const EstimateRecord* rec : catalog.records()) {
            if (rec->measurement) continue;
            const auto truth = gt.value_opt(rec->acc_id, rec->job_id, rec->combo);
            if (!truth) continue;
            ae += std::abs(catalog.lookup(rec->acc_id, rec->job_id, rec->combo) - *truth);
            ++n;
        }
        return n ? ae / n : 0.0;
    };

    const double before = estimate_only_mae();
    const Combination solo = Combination::solo(held_out);
    RefineInput in{"acc00", solo, {{held_out, gt.value("acc00", held_out, solo)}}};
    refine(models.p2, catalog, in, {"acc01"});
    const double after = estimate_only_mae();
    CHECK(after <= before + 1e-12);
}
