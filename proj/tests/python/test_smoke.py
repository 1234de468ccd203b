import json
import math

import numpy as np
import pytest

import semcert


def test_transforms_roundtrip_shape():
    x = np.linspace(0.1, 0.9, 36).reshape(6, 6)
    assert np.allclose(semcert.brightness(x, 0.1), x + 0.1)
    assert np.allclose(semcert.contrast(x, 2.0), 2.0 * x)
    assert np.allclose(semcert.translate(x, 1, 0)[:, 1:], x[:, :-1])
    t = semcert.Transform(["contrast", "brightness"])
    assert t.dim == 2
    assert np.allclose(t.apply(x, [2.0, 0.1]), 2.0 * x + 0.1)
    alpha, beta = [2.0, 0.1], [0.5, -0.2]
    gamma = t.resolve(alpha, beta)
    assert np.allclose(t.apply(t.apply(x, beta), alpha), t.apply(x, gamma))


def test_clopper_pearson_closed_form():
    assert semcert.clopper_pearson_lower(100, 100, 0.001) == pytest.approx(0.0005 ** (1 / 100), abs=1e-9)
    with pytest.raises(semcert.DomainError):
        semcert.clopper_pearson_lower(1, 0, 0.001)


def test_brightness_xi_matches_closed_form():
    t = semcert.Transform(["brightness"])
    spec = semcert.SmoothingSpec(t, [semcert.ParamMap.normal(0.6)], sigma=0.0, n_samples=20000)
    grid = semcert.ParameterGrid.tensor([0.0], [-0.5], [0.5], [3])
    table = semcert.compute_bounds(spec, grid, seed=3, ray_samples=2)
    cert = semcert.Certifier(table)
    for h in (0.6, 0.8, 0.95):
        assert cert.xi(h) - cert.xi(0.5) == pytest.approx(semcert.analytic_additive_xi(h, 0.0, 0.6), abs=0.03)
    res = cert.certify_point(0.9, [0.1])
    assert res.certified
    assert not cert.certify_point(0.6, [0.5]).certified


def test_mlp_and_smoothed_prediction(tmp_path):
    images, labels = semcert.desk_dataset(60, seed=1, side=12)
    assert images[0].shape == (12, 12)
    model = semcert.train(images, labels, 10, epochs=1, hidden=8, seed=2)
    probs = np.asarray(model.forward(images[0]))
    assert probs.sum() == pytest.approx(1.0)
    path = tmp_path / "m.bin"
    model.save(str(path))
    again = semcert.Mlp.load(str(path))
    assert np.array_equal(again.parameters(), model.parameters())
    with pytest.raises(semcert.MissingArtifactError):
        semcert.Mlp.load(str(tmp_path / "absent.bin"))

    spec = semcert.SmoothingSpec(semcert.Transform(["brightness"]), [semcert.ParamMap.normal(0.1)])
    est = semcert.smoothed_predict(images[0], model, spec, int(np.argmax(probs)), n_max=50, seed=4)
    assert 0.0 <= est.h_lower <= 1.0
    assert est.n <= 50


def test_pipeline_from_config(tmp_path):
    text = "\n".join([
        f"data.images = {tmp_path / 'images.idx'}",
        f"data.labels = {tmp_path / 'labels.idx'}",
        f"model.path = {tmp_path / 'model.bin'}",
        f"output.dir = {tmp_path / 'out'}",
        "seed = 5",
        "synth.count = 12",
        "train.epochs = 1",
        "model.hidden = 8",
        "certify.n_max = 100",
        "transform.0.name = brightness",
        "transform.0.distribution = normal",
        "transform.0.params = 0.6",
        "transform.0.range = -0.3 0.3",
        "bounds.n_samples = 2000",
        "bounds.ray_samples = 2",
    ])
    cfg = semcert.RunConfig.from_text(text)
    assert len(cfg.digest()) == 16
    semcert.cmd_synth_data(cfg)
    semcert.cmd_train(cfg)
    bounds_path = semcert.cmd_bounds(cfg)
    stored = json.loads(bounds_path.read_text())
    assert stored
    summary = semcert.cmd_cra(cfg)
    assert summary.images == 12
    assert summary.cra <= summary.clean_accuracy + 1e-12
    with pytest.raises(semcert.ConfigError):
        semcert.RunConfig.from_text(text, ["transform.0.distribution = nonsense"])
