import math

import numpy as np
import pytest

from minimaxlab import ProblemSpec, WSpec, build_grid, dual_norm_W, eval_W
from minimaxlab.domain import (DomainError, load_problem_spec,
                               parse_problem_mapping, read_keyvalue_file)


def small_spec(**kw):
    base = dict(N=2, p=4.0, Vinf=1.0, L=4.0, h=0.25)
    base.update(kw)
    return ProblemSpec(**base)


class TestProblemSpec:
    def test_rejects_one_dimension(self):
        with pytest.raises(DomainError):
            ProblemSpec(N=1)

    def test_rejects_subquadratic_exponent(self):
        with pytest.raises(DomainError):
            small_spec(p=2.0)

    def test_rejects_supercritical_exponent_3d(self):
        with pytest.raises(DomainError):
            ProblemSpec(N=3, p=6.0, L=4.0, h=0.5)
        ProblemSpec(N=3, p=4.0, L=4.0, h=0.5)  # subcritical is fine

    def test_rejects_nonpositive_vinf(self):
        with pytest.raises(DomainError):
            small_spec(Vinf=0.0)

    def test_rejects_noninteger_spacing_ratio(self):
        with pytest.raises(DomainError):
            small_spec(L=1.0, h=0.3)

    def test_derived_exponents(self):
        spec = small_spec(p=4.0)
        assert spec.q == pytest.approx(2.0)
        assert spec.sigma == pytest.approx(0.5)
        assert spec.q * spec.sigma == pytest.approx(1.0, abs=1e-15)
        assert spec.sigma == pytest.approx(1.0 / spec.q, abs=1e-15)


class TestBuildGrid:
    def test_small_grid_shape_and_origin(self):
        grid = build_grid(small_spec(L=1.0, h=0.5))
        assert grid.shape == (5, 5)
        assert grid.origin_index == (2, 2)
        assert grid.axis[2] == 0.0

    def test_desk_grid_shape(self):
        grid = build_grid(small_spec(L=16.0, h=0.125))
        assert grid.shape == (257, 257)

    def test_symmetric_axis(self):
        grid = build_grid(small_spec())
        assert np.allclose(grid.axis, -grid.axis[::-1])

    def test_memory_cap(self):
        with pytest.raises(DomainError):
            build_grid(ProblemSpec(N=3, p=4.0, L=64.0, h=0.125))


class TestEvalW:
    def test_exponential_at_origin(self):
        spec = small_spec(W=WSpec(family="exponential", c=0.5, a=0.5))
        grid = build_grid(spec)
        w = eval_W(spec, grid)
        assert w.values[grid.origin_index] == pytest.approx(0.5)

    def test_exponential_at_radius_two(self):
        spec = small_spec(W=WSpec(family="exponential", c=1.0, a=1.0))
        grid = build_grid(spec)
        w = eval_W(spec, grid)
        # node at (2, 0)
        idx = (grid.origin_index[0] + round(2 / spec.h), grid.origin_index[1])
        assert w.values[idx] == pytest.approx(math.exp(-2.0), rel=1e-12)

    def test_zero_family(self):
        spec = small_spec()
        grid = build_grid(spec)
        assert not np.any(eval_W(spec, grid).values)

    def test_bump_family_compact_support(self):
        spec = small_spec(W=WSpec(family="bump", c=2.0, a=1.0))
        grid = build_grid(spec)
        w = eval_W(spec, grid).values
        assert w[grid.origin_index] == pytest.approx(2.0)
        assert np.all(w[grid.radius() >= 1.0] == 0.0)

    def test_unknown_family_rejected(self):
        with pytest.raises(DomainError):
            WSpec(family="sombrero")


class TestDualNormW:
    def test_zero(self):
        spec = small_spec()
        assert dual_norm_W(spec, build_grid(spec)) == 0.0

    def test_single_cell_indicator(self, tmp_path):
        from minimaxlab.field import GridFunction, save_gridfunction

        spec = small_spec()
        grid = build_grid(spec)
        vals = np.zeros(grid.shape)
        vals[grid.origin_index] = 1.0
        path = tmp_path / "w.gfb"
        save_gridfunction(GridFunction(grid, vals), path)
        spec_table = small_spec(W=WSpec(family="table", table_path=str(path)))
        # p = 4 gives q = 2, so the norm of a one-node indicator is h^(N/2)
        assert dual_norm_W(spec_table, grid) == pytest.approx(spec.h ** (spec.N / 2))

    def test_exponential_against_radial_oracle(self):
        from scipy.integrate import quad

        spec = ProblemSpec(N=2, p=4.0, Vinf=1.0, L=16.0, h=0.125,
                           W=WSpec(family="exponential", c=1.0, a=1.0))
        grid = build_grid(spec)
        got = dual_norm_W(spec, grid)
        # independent high-resolution polar quadrature of (int e^{-2r} 2 pi r dr)^(1/2)
        integral, _ = quad(lambda r: math.exp(-2.0 * r) * 2.0 * math.pi * r, 0.0, 40.0)
        assert got == pytest.approx(integral ** 0.5, rel=2e-3)

    def test_monotone_in_box_size(self):
        vals = []
        for L in (4.0, 8.0, 12.0):
            spec = small_spec(L=L, W=WSpec(family="exponential", c=1.0, a=0.5))
            vals.append(dual_norm_W(spec, build_grid(spec)))
        assert vals[0] <= vals[1] <= vals[2]


def test_gaussian_product_quadrature():
    # axis-separable Gaussian: trapezoid-type quadrature is spectrally accurate
    spec = ProblemSpec(N=2, p=4.0, Vinf=1.0, L=12.0, h=0.125)
    grid = build_grid(spec)
    r2 = grid.radius() ** 2
    total = float(np.sum(np.exp(-r2)) * grid.weight)
    assert total == pytest.approx(math.pi, rel=1e-6)


class TestKeyValueFiles:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "problem.cfg"
        path.write_text(
            "# desk configuration\n"
            "dim = 2\np = 4.0\nv_inf = 1.0\nbox_l = 4.0\nspacing_h = 0.25\n"
            "w_family = exponential\nw_c = 0.5\nw_a = 0.5\n")
        spec = load_problem_spec(path)
        assert spec.N == 2
        assert spec.W.family == "exponential"
        assert spec.W.c == 0.5

    def test_unknown_key_rejected(self):
        with pytest.raises(DomainError, match="unknown problem keys"):
            parse_problem_mapping({"dim": "2", "box_len": "4"})

    def test_malformed_line_reports_position(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("dim = 2\nnonsense line\n")
        with pytest.raises(DomainError, match="2"):
            read_keyvalue_file(path)

    def test_duplicate_key_rejected(self, tmp_path):
        path = tmp_path / "dup.cfg"
        path.write_text("dim = 2\ndim = 3\n")
        with pytest.raises(DomainError, match="duplicate"):
            read_keyvalue_file(path)
