import numpy as np
import pytest

from app.core.exceptions import ParameterError, StageError
from app.core.tensor import no_grad
from app.models.grid import Grid
from app.schemas.synth import SynthConfig
from app.schemas.training import TrainConfig
from app.services.interp_service import upsample_bilinear, upsample_nn
from app.services.morph_eval_service import building_boundary_report, road_profile_report
from app.services.network_service import init_model, msm_forward
from app.services.numeric_eval_service import error_stats
from app.services.raster_service import downsample_nn
from app.services.reconstruction_service import reconstruct
from app.services.synth_service import generate_scene
from app.services.training_service import build_blocks, train

def test_single_tile_matches_forward(tiny_model, rng):
    """Test that a grid smaller than one block is one direct forward pass"""
    g = Grid.from_array(rng.normal(20.0, 2.0, size=(16, 16)), cell_size=4.0)
    out = reconstruct(g, tiny_model, 4)
    with no_grad():
        expected = msm_forward(g.values[None, None], tiny_model)[-1].data[0, 0]
    assert out.shape == (64, 64)
    assert out.cell_size == 1.0
    assert np.array_equal(out.values, expected)

def test_zero_model_matches_nearest_neighbour(zero_model, random_grid):
    """Test tiled reconstruction with an all-zero model"""
    out = reconstruct(random_grid, zero_model, 4, block=8, overlap=4)
    expected = upsample_nn(random_grid, 4)
    assert np.array_equal(out.values, expected.values)
    assert out.same_geometry(expected)

def test_tiled_matches_untiled(rng):
    """Test that overlap hides tile borders beyond the receptive field"""
    m = init_model(1, split=2, features=4, rng=rng)
    g = Grid.from_array(rng.normal(0.0, 1.0, size=(400, 400)))
    whole = reconstruct(g, m, 2, block=400, overlap=0)
    tiled = reconstruct(g, m, 2, block=250, overlap=125)
    assert np.allclose(tiled.values, whole.values, rtol=0, atol=1e-9)

def test_nodata_tile_is_nodata(zero_model, rng):
    """Test that tiles touching nodata produce nodata"""
    values = rng.normal(size=(32, 32))
    values[3, 3] = -9999.0
    g = Grid.from_array(values)
    out = reconstruct(g, zero_model, 2, block=16, overlap=8)
    assert out.values[6, 6] == -9999.0
    assert out.values[0, 0] == -9999.0
    assert out.values[60, 60] == values[30, 30]

def test_threads_do_not_change_output(tiny_model, rng):
    """Test that parallel tiles give identical results"""
    g = Grid.from_array(rng.normal(size=(40, 40)))
    one = reconstruct(g, tiny_model, 2, block=16, overlap=8, threads=1)
    four = reconstruct(g, tiny_model, 2, block=16, overlap=8, threads=4)
    assert np.array_equal(one.values, four.values)

def test_overlap_is_clamped(zero_model, random_grid):
    """Test that an overlap as large as the block is halved"""
    out = reconstruct(random_grid, zero_model, 2, block=6, overlap=6)
    assert np.array_equal(out.values, upsample_nn(random_grid, 2).values)

def test_stage_mismatch(zero_model, random_grid):
    """Test that an input resolution the model was not trained for is rejected"""
    zero_model.source_cell_size = 8.0
    with pytest.raises(StageError):
        reconstruct(random_grid.like(random_grid.values, cell_size=3.0), zero_model, 2)
    with pytest.raises(StageError):
        reconstruct(random_grid.like(random_grid.values, cell_size=1.0), zero_model, 4)

def test_factor_must_be_power_of_two(zero_model, random_grid):
    """Test factor validation"""
    with pytest.raises(ParameterError):
        reconstruct(random_grid, zero_model, 3)

def _scene(seed, size):
    return generate_scene(SynthConfig(size=size, cell_size=0.5, seed=seed, road_spacing=40.0, road_width=6.0,
                                      building_density=0.3, footprint_range=(5.0, 15.0)))

@pytest.mark.slow
def test_trained_model_beats_bilinear_on_held_out_scene():
    """Test that a trained chain is more accurate than bilinear on an unseen scene"""
    cfg = TrainConfig(n_scales=2, batch_size=8, patch_size=16, block=128, block_overlap=64, features=16,
                      split_divisor=4, lr=1e-3, lr_drop_after=2000, total_iters=3000, seed=0, log_every=500)
    areas = [_scene(seed, 256).dem for seed in (101, 102, 103)]
    model, _ = train(build_blocks(areas, cfg), cfg)

    held_out = _scene(7, 512)
    ref = held_out.dem
    low = downsample_nn(ref, 4)
    msm = reconstruct(low, model, 4, block=64, overlap=32)
    bi = upsample_bilinear(low, 4)

    assert error_stats(msm, ref).mae < error_stats(bi, ref).mae

    # road beds follow smooth terrain, so both profiles correlate almost perfectly
    msm_pcc = road_profile_report(msm, ref, held_out.roads).mean_pcc
    bi_pcc = road_profile_report(bi, ref, held_out.roads).mean_pcc
    assert msm_pcc >= bi_pcc - 1e-3

    def one_cell(report):
        return next(r.ratio for r in report.ratios if r.buffer == 1)

    msm_edges = building_boundary_report(msm, held_out.buildings)
    bi_edges = building_boundary_report(bi, held_out.buildings)
    assert one_cell(msm_edges) >= one_cell(bi_edges)
