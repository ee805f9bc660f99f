"""Smoke tests for the Python bindings: each major operation once."""

import math

import pytest

import hetsim


@pytest.fixture(scope="module")
def table():
    spec = hetsim.SyntheticSpec()
    spec.accelerators = 2
    spec.families = 3
    spec.batches_per_family = 2
    spec.interference = 0.3
    spec.seed = 7
    return hetsim.generate_synthetic(spec)


def test_synthetic_table_shape(table):
    assert len(table.accelerators) == 2
    assert len(table.jobs) == 6
    solo = hetsim.Combination.solo(table.jobs[0].job_id)
    v = table.value(table.accelerators[0].acc_id, table.jobs[0].job_id, solo)
    assert 0.0 <= v <= 1.0


def test_table_io_roundtrip(table, tmp_path):
    path = str(tmp_path / "table.csv")
    hetsim.save_table(table, path)
    back = hetsim.load_table(path)
    assert back.normalizer == table.normalizer
    assert [j.job_id for j in back.jobs] == [j.job_id for j in table.jobs]


def test_catalog_lookup_and_snapshot(table, tmp_path):
    catalog = hetsim.Catalog(table.schema, list(table.accelerators))
    for job in table.jobs:
        catalog.register_job(job)
    acc = table.accelerators[0].acc_id
    job = table.jobs[0].job_id
    solo = hetsim.Combination.solo(job)
    assert catalog.put_estimate(acc, job, solo, 0.4) == 0
    assert catalog.put_estimate(acc, job, solo, 0.6) == 1
    assert catalog.lookup(acc, job, solo) == 0.5
    catalog.record_measurement(acc, job, solo, 0.55)
    assert catalog.lookup(acc, job, solo) == 0.55

    snap = str(tmp_path / "snapshot.tsv")
    catalog.export_snapshot(snap)
    fresh = hetsim.Catalog(table.schema, list(table.accelerators))
    for job_spec in table.jobs:
        fresh.register_job(job_spec)
    fresh.import_snapshot(snap)
    assert fresh.lookup(acc, job, solo) == 0.55


def test_regressor_train_predict_save(tmp_path):
    model = hetsim.Regressor([3, 8, 1], 5)
    samples = []
    for i in range(64):
        s = hetsim.Sample()
        s.input = [0.1 * (i % 7), 0.2, -0.3]
        s.target = [0.7]
        samples.append(s)
    hp = hetsim.Hyperparams()
    hp.epochs = 150
    hp.learning_rate = 0.2
    hp.batch_size = 16
    report = model.train(samples, [], hp)
    assert report.final_train_mae < 0.02
    assert model.gradient_check(samples[0], 1e-5) < 1e-4

    path = str(tmp_path / "model.txt")
    model.save(path)
    back = hetsim.Regressor.load(path)
    assert back.predict([0.5, 0.2, -0.3]) == model.predict([0.5, 0.2, -0.3])


def test_solver_matches_brute_force():
    inst = hetsim.AllocationInstance()
    inst.servers = ["s0"]
    acc = hetsim.AcceleratorType()
    acc.acc_id = "gpu"
    acc.capacity = 2
    acc.power_idle = 50.0
    acc.power_per_unit_load = 100.0
    inst.acc_types = [acc]
    job = hetsim.JobSpec()
    job.job_id = "job1"
    job.model_family = "fam"
    job.batch_size = 16
    job.min_throughput = 0.3
    job.distributability = 1
    inst.jobs = [job]
    inst.combos = hetsim.all_combinations(inst.jobs)
    inst.set_throughput("gpu", "job1", hetsim.Combination.solo("job1"), 0.5)

    alloc = hetsim.solve(inst)
    oracle = hetsim.brute_force(inst)
    assert alloc.status == hetsim.SolveStatus.OPTIMAL
    assert alloc.objective_watts == 100.0
    assert oracle.objective_watts == alloc.objective_watts
    assert hetsim.validate(inst, alloc) == []
    assert hetsim.power_of(inst, alloc) == alloc.objective_watts


def test_closed_loop_oracle_run(table):
    scenario = hetsim.Scenario()
    scenario.ground_truth = table
    scenario.servers = ["server0", "server1"]
    scenario.accelerators = list(table.accelerators)
    scenario.estimator = hetsim.EstimatorKind.ORACLE
    jobs = [j.job_id for j in table.jobs]
    scenario.bootstrap_jobs = jobs[:3]
    scenario.arrivals = jobs[3:5]
    scenario.rounds = 4
    scenario.noise_sigma = 0.0
    sla = hetsim.SlaPolicy()
    sla.min_throughput_factor = 0.5
    scenario.sla = sla

    result = hetsim.run(scenario, None, None, seed=3)
    assert result.summary.rounds == 4
    assert result.summary.sla_violations == 0
    trace_text = hetsim.trace_to_jsonl(result.traces)
    assert len(trace_text.splitlines()) == 4
    again = hetsim.run(scenario, None, None, seed=3)
    assert hetsim.trace_to_jsonl(again.traces) == trace_text
