import itertools
import random

import pytest

import lana


def make_instance(layers=6, ops=4, seed=0):
    rng = random.Random(seed)
    tables = []
    for i in range(layers):
        teacher_cost = round(1 + 4 * rng.random(), 3)
        pool = [lana.CandidateOp("teacher", 0.0, teacher_cost)]
        for j in range(1, ops):
            pool.append(lana.CandidateOp(f"op{j}", 0.001 + rng.random(),
                                         round(teacher_cost * (0.05 + 1.25 * rng.random()), 3), ["efn"]))
        pool.append(lana.CandidateOp("identity", 0.5 + rng.random(), 0.01, ["skip"]))
        tables.append(lana.LayerTable(i, pool, 0))
    return lana.SearchInstance(f"smoke-{seed}", tables)


def brute_force(inst, budget_ms):
    best = None
    for choice in itertools.product(*[range(len(l.ops)) for l in inst.layers]):
        sel = lana.Selection(list(choice))
        c = sum(round(l.ops[k].cost * 1000) for l, k in zip(inst.layers, choice))
        if c > int(budget_ms * 1000 + 1e-6):
            continue
        key = (lana.objective(inst, sel), c, list(choice))
        if best is None or key < best:
            best = key
    return best


def test_round_trip_and_validate():
    inst = make_instance()
    assert lana.validate_instance(inst) == []
    text = lana.write_instance(inst)
    assert lana.parse_instance(text) == inst
    inst.layers[2].ops[0].score_delta = 0.3
    assert any("layer 2" in v for v in lana.validate_instance(inst))
    with pytest.raises(lana.ValidationError):
        lana.parse_instance(lana.write_instance(inst))
    with pytest.raises(lana.ParseError):
        lana.parse_instance("{")


def test_teacher_at_full_budget():
    inst = make_instance(seed=1)
    res = lana.solve(inst, lana.budget_from_ratio(inst, 1.0))
    assert res.status == lana.SolveStatus.optimal
    assert res.objective == 0.0
    assert res.selection == lana.teacher_selection(inst)


@pytest.mark.parametrize("seed", range(5))
def test_solve_matches_enumeration(seed):
    inst = make_instance(layers=5, ops=4, seed=seed)
    budget = lana.budget_from_ratio(inst, 0.5)
    best = brute_force(inst, budget)
    res = lana.solve(inst, budget, threads=2)
    assert res.has_solution() == (best is not None)
    if best is not None:
        assert res.objective == best[0]
        assert res.selection.choices == best[2]


def test_k_diverse_report():
    inst = make_instance(layers=10, ops=5, seed=3)
    rep = lana.solve_k_diverse(inst, lana.budget_from_ratio(inst, 0.45), k=10, overlap=0.7)
    assert rep.overlap_limit == 7
    sols = [s.selection for s in rep.solutions]
    assert 1 <= len(sols) <= 10
    for a, b in itertools.combinations(sols, 2):
        assert lana.overlap(a, b) <= 7
    back = lana.parse_report(lana.write_report(rep))
    assert [s.selection for s in back.solutions] == sols
    hist = lana.selection_histogram(inst, sols)
    assert sum(hist.values()) == 10 * len(sols)


def test_infeasible_and_zero_shot():
    inst = make_instance(seed=4)
    assert lana.solve(inst, 0.0).status == lana.SolveStatus.infeasible
    zs = lana.zero_shot_pool(inst, "identity")
    assert all(len(l.ops) == 2 for l in zs.layers)
    res = lana.solve(zs, lana.budget_from_ratio(zs, 0.5))
    assert {zs.layers[i].ops[k].op_id for i, k in enumerate(res.selection.choices)} <= {"teacher", "identity"}
    keep_teacher = lana.restrict_pool(inst, lambda op: op.op_id == "teacher")
    assert all(len(l.ops) == 1 for l in keep_teacher.layers)
    with pytest.raises(lana.InvalidArgument):
        lana.restrict_pool(inst, lambda op: op.op_id != "teacher")


def test_random_baseline_and_ranking():
    inst = make_instance(layers=8, ops=5, seed=5)
    budget = lana.budget_from_ratio(inst, 0.7)
    a = lana.random_search(inst, budget, n=200, seed=42, threads=1)
    b = lana.random_search(inst, budget, n=200, seed=42, threads=4)
    assert a["population"] == b["population"]
    assert lana.solve(inst, budget).objective <= a["best_objective"]

    sols = [s[1] for s in a["population"][:30]]
    proxy = [lana.objective(inst, s) for s in sols]
    ranked = lana.rank_candidates(inst, sols)
    assert [r["proxy_objective"] for r in ranked] == sorted(proxy)
    assert lana.proxy_correlation(inst, sols, proxy) == 1.0
    assert lana.kendall_tau([1, 2, 3], [1, 3, 2]) == 1 / 3
    with pytest.raises(lana.DegenerateRanking):
        lana.kendall_tau([1, 1, 1], [1, 2, 3])
