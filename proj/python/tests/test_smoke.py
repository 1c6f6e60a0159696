import json

import numpy as np
import pytest

import hoifnet


def test_operators_of_default_skeleton():
    ops = hoifnet.operators(hops=3)
    s, lap = ops["s"], ops["laplacian"]
    assert s.shape == (17, 17)
    np.testing.assert_allclose(s, s.T)
    np.testing.assert_array_equal(s + lap, np.eye(17))
    np.testing.assert_allclose(ops["powers"][1], s @ s, atol=1e-12)
    eig = np.linalg.eigvalsh(s)
    assert eig.min() > -1 and eig.max() <= 1 + 1e-12


def test_fair_methods_agree_and_alpha_maps_to_s():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((17, 2))
    outs = [hoifnet.fair(x, s=4.0, method=m) for m in ("spectral", "direct", "jacobi")]
    for o in outs[1:]:
        np.testing.assert_allclose(o, outs[0], atol=1e-8)
    lap = hoifnet.operators()["laplacian"]
    np.testing.assert_allclose(outs[0], np.linalg.solve(np.eye(17) + 4.0 * lap, x), atol=1e-10)
    np.testing.assert_allclose(hoifnet.fair(x, alpha=0.2), hoifnet.fair(x, s=4.0), atol=1e-12)
    np.testing.assert_array_equal(hoifnet.fair(x, s=0.0), x)
    with pytest.raises(ValueError):
        hoifnet.fair(x, s=1.0, alpha=0.5)


def test_synth_and_metrics():
    x2d, x3d = hoifnet.synth(20, seed=3)
    assert x2d.shape == (20, 17, 2) and x3d.shape == (20, 17, 3)
    a, b = hoifnet.synth(20, seed=3)
    np.testing.assert_array_equal(a, x2d)
    gt = x3d[0] - x3d[0, 0]
    assert hoifnet.mpjpe(gt, gt) == 0.0
    shifted = gt + np.array([0.0, 0.0, 30.0])
    shifted[0] = gt[0]
    assert hoifnet.mpjpe(shifted, gt) == pytest.approx(30.0 * 16 / 17)
    assert hoifnet.pa_mpjpe(2.0 * gt + 5.0, gt) < 1e-9
    pck, auc = hoifnet.pck_auc(x3d[:5] - x3d[:5, :1], x3d[:5] - x3d[:5, :1])
    assert pck == 1.0 and auc == 1.0
    with pytest.raises(ValueError):
        hoifnet.mpjpe(gt[:, :2], gt)


def test_train_predict_and_cli_round_trip(tmp_path):
    x2d, x3d = hoifnet.synth(120, seed=4)
    res = hoifnet.train(x2d, x3d, model={"num_layers": 3, "hidden_width": 12},
                        train={"epochs": 2, "batch_size": 16, "seed": 1})
    assert len(res["history"]) == 2
    assert res["history"][-1]["eval_mpjpe"] < res["initial_mpjpe"]
    pred = res["model"].predict(x2d[:4])
    assert pred.shape == (4, 17, 3) and np.isfinite(pred).all()
    np.testing.assert_allclose(pred[:, 0], 0.0, atol=1e-9)

    data, run = str(tmp_path / "data"), str(tmp_path / "run")
    assert hoifnet.run_cli(["gen", "--out", data, "--n", "60", "--seed", "2"])[0] == 0
    code, out, err = hoifnet.run_cli(["train", "--data", data, "--out", run, "--epochs", "1",
                                      "--layers", "3", "--width", "12", "--batch-size", "16"])
    assert code == 0, err
    model = hoifnet.load_model(run + "/final.json")
    assert json.loads(model.config_json)["num_layers"] == 3
    assert len(model.history) == 1
    assert hoifnet.run_cli(["frobnicate"])[0] == 2
