import json

import numpy as np
import pytest

from cdpinn.errors import FormatError, UnknownDistanceError, UnsupportedVersion, ValidationError
from cdpinn.physics import build_h_ad
from cdpinn.problem import (
    H2_DISTANCES, builtin_h2, d_h_ad_d_lambda, load_problem, make_problem, problem_to_dict, resolve_problem,
    shifted, write_problem,
)

from conftest import random_hermitian

PROBLEMS_DIR = __import__("pathlib").Path(__file__).resolve().parents[1] / "problems"


class TestBuiltinH2:
    def test_fci_coupling(self):
        assert builtin_h2(1.0).h_final[0][3] == 0.19679058

    def test_hf_entry(self):
        assert builtin_h2(2.5).h_initial[1][1] == -0.7029436

    def test_hf_is_diagonal(self):
        h = builtin_h2(2.0).h_initial
        assert np.all(h[~np.eye(4, dtype=bool)] == 0)

    @pytest.mark.parametrize("d", [0.5, 3.0, 1.25])
    def test_unknown_distance(self, d):
        with pytest.raises(UnknownDistanceError) as info:
            builtin_h2(d)
        for tag in ("h2:1.0", "h2:1.5", "h2:2.0", "h2:2.5"):
            assert tag in str(info.value)

    def test_fci_structure(self, h2):
        # same diagonal, one coupling on both anti-diagonal pairs
        h = h2.h_final
        np.testing.assert_array_equal(np.diag(h), np.diag(h2.h_initial))
        c = h[0, 3]
        assert c != 0 and h[3, 0] == h[1, 2] == h[2, 1] == c
        assert np.count_nonzero(h - np.diag(np.diag(h))) == 4

    def test_label_and_distance(self):
        p = builtin_h2(1.5)
        assert p.label == "h2_sto3g_1.5" and p.bond_distance == 1.5 and p.n_qubits == 2


class TestValidation:
    def test_non_hermitian(self):
        bad = np.array([[0, 1], [0, 0]], dtype=float)
        with pytest.raises(ValidationError) as info:
            make_problem(np.eye(2), bad)
        assert info.value.check == "hermiticity"

    def test_dimension(self):
        with pytest.raises(ValidationError) as info:
            make_problem(np.eye(8), np.eye(8), n_qubits=2)
        assert info.value.check == "dimension"

    def test_complex_rejected(self, rng):
        h = random_hermitian(rng, 2)
        with pytest.raises(ValidationError) as info:
            make_problem(np.eye(2), h)
        assert info.value.check == "real"

    def test_non_finite(self):
        with pytest.raises(ValidationError) as info:
            make_problem(np.eye(2), np.diag([np.nan, 1.0]))
        assert info.value.check == "finite"

    def test_matrices_frozen(self):
        with pytest.raises(ValueError):
            builtin_h2(1.0).h_final[0, 0] = 0.0


class TestDerivative:
    def test_coupling_entry(self):
        assert d_h_ad_d_lambda(builtin_h2(1.0))[0][3] == 0.19679058

    def test_equal_endpoints(self):
        p = make_problem(np.eye(4), np.eye(4))
        assert np.all(d_h_ad_d_lambda(p) == 0)

    def test_matches_finite_difference(self, h2):
        dh = d_h_ad_d_lambda(h2)
        assert np.all(dh.imag == 0) and np.array_equal(dh, dh.conj().T)
        h = 1e-4
        for lam in (0.1, 0.5, 0.9):
            fd = (build_h_ad(h2, lam + h) - build_h_ad(h2, lam - h)) / (2 * h)
            np.testing.assert_allclose(fd, dh, atol=1e-12)


class TestFiles:
    def test_roundtrip(self, tmp_path, h2):
        path = tmp_path / "p.json"
        write_problem(h2, path)
        assert load_problem(path) == h2

    def test_roundtrip_complex_free_form(self, tmp_path, rng):
        a = rng.normal(size=(8, 8))
        p = make_problem(a + a.T, np.diag(rng.normal(size=8)), label="random")
        write_problem(p, tmp_path / "r.json")
        q = load_problem(tmp_path / "r.json")
        assert q == p and q.digest() == p.digest()

    @pytest.mark.parametrize("d", H2_DISTANCES)
    def test_shipped_files_match_builtins(self, d):
        assert load_problem(PROBLEMS_DIR / f"h2_sto3g_{d:.1f}.json") == builtin_h2(d)

    def test_im_block_optional(self):
        doc = problem_to_dict(builtin_h2(1.0))
        assert "im" not in doc["h_initial"] and "im" not in doc["h_final"]

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(FormatError):
            load_problem(path)

    def test_missing_field(self, tmp_path):
        doc = problem_to_dict(builtin_h2(1.0))
        del doc["h_final"]
        (tmp_path / "m.json").write_text(json.dumps(doc))
        with pytest.raises(FormatError):
            load_problem(tmp_path / "m.json")

    def test_version(self, tmp_path):
        doc = problem_to_dict(builtin_h2(1.0))
        doc["schema_version"] = 2
        (tmp_path / "v.json").write_text(json.dumps(doc))
        with pytest.raises(UnsupportedVersion):
            load_problem(tmp_path / "v.json")

    def test_file_non_hermitian(self, tmp_path):
        doc = problem_to_dict(builtin_h2(1.0))
        doc["h_final"]["re"][0][3] = 0.5
        (tmp_path / "nh.json").write_text(json.dumps(doc))
        with pytest.raises(ValidationError) as info:
            load_problem(tmp_path / "nh.json")
        assert info.value.check == "hermiticity"

    def test_file_dimension(self, tmp_path):
        doc = problem_to_dict(make_problem(np.eye(8), np.eye(8)))
        doc["n_qubits"] = 2
        (tmp_path / "d.json").write_text(json.dumps(doc))
        with pytest.raises(ValidationError) as info:
            load_problem(tmp_path / "d.json")
        assert info.value.check == "dimension"


class TestResolve:
    def test_tag(self):
        assert resolve_problem("h2:2.0") == builtin_h2(2.0)

    def test_path(self):
        assert resolve_problem(str(PROBLEMS_DIR / "h2_sto3g_1.5.json")) == builtin_h2(1.5)

    @pytest.mark.parametrize("tag", ["h2:3.0", "h2:abc"])
    def test_unknown_tag(self, tag):
        with pytest.raises(UnknownDistanceError):
            resolve_problem(tag)

    def test_unknown_path(self):
        with pytest.raises(FormatError, match="h2:1.0"):
            resolve_problem("no/such/file.json")

    def test_digest_stable(self):
        assert builtin_h2(1.0).digest() == resolve_problem("h2:1.0").digest()
        assert builtin_h2(1.0).digest() != builtin_h2(1.5).digest()


def test_shifted_follows_same_path(h2):
    s = 0.05
    q = shifted(h2, s)
    for mu in (0.0, 0.3, 1.0):
        np.testing.assert_allclose(build_h_ad(q, mu), build_h_ad(h2, s + (1 - s) * mu), atol=1e-15)
