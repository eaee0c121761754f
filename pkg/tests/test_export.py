import numpy as np
import pytest

from scenesim.export import (dumps_canonical, export_document,
                             import_placements, read_pfm, read_transmittance,
                             write_pfm, write_transmittance)
from scenesim.orchestrator import Session, run_command


def _session_with_vehicle(scene):
    session = Session(id="t", state=scene, seed=3)
    run_command(session, "Add a red Porsche in 20 to 30 meters driving ahead")
    return session


class TestExportDocument:
    def test_contains_cameras_and_assets(self, scene):
        session = _session_with_vehicle(scene)
        doc = export_document(session.state, session.bank)
        assert doc["version"] == 1
        assert len(doc["cameras"]) == len(scene.rig.cameras)
        assert doc["reference_camera"] == scene.rig.reference_camera
        assert len(doc["assets"]) == 1
        asset = doc["assets"][0]
        assert asset["asset_id"] == "car_porsche_911"
        assert asset["trajectory"]["dt"] == 0.1
        assert len(asset["pose"]) == 3

    def test_deleted_vehicles_excluded(self, scene):
        session = _session_with_vehicle(scene)
        run_command(session, "Delete all cars in the scene")
        doc = export_document(session.state, session.bank)
        assert doc["assets"] == []
        assert doc["deleted_ids"] == ["veh001"]

    def test_round_trip_placements(self, scene):
        session = _session_with_vehicle(scene)
        doc = export_document(session.state, session.bank)
        placements = import_placements(doc)
        assert placements[0]["instance_id"] == "veh001"
        assert placements[0]["pose"] == tuple(doc["assets"][0]["pose"])
        assert len(placements[0]["trajectory"].samples) == \
            len(doc["assets"][0]["trajectory"]["samples"])

    def test_canonical_dump_is_stable(self, scene):
        session = _session_with_vehicle(scene)
        doc = export_document(session.state, session.bank)
        assert dumps_canonical(doc) == dumps_canonical(doc)
        # key insertion order must not matter
        shuffled = dict(reversed(list(doc.items())))
        assert dumps_canonical(shuffled) == dumps_canonical(doc)


class TestHdrFiles:
    def test_pfm_round_trip(self, tmp_path, rng):
        img = rng.uniform(0, 1e4, (12, 16, 3)).astype(np.float32)
        path = str(tmp_path / "sky.pfm")
        write_pfm(path, img)
        back = read_pfm(path)
        assert back.dtype == np.float32
        assert np.array_equal(back, img)

    def test_pfm_rejects_non_rgb(self, tmp_path):
        with pytest.raises(ValueError):
            write_pfm(str(tmp_path / "bad.pfm"), np.zeros((4, 4)))

    def test_transmittance_round_trip(self, tmp_path, rng):
        grid = rng.uniform(0, 1, (9, 14)).astype(np.float32)
        path = str(tmp_path / "trans.bin")
        write_transmittance(path, grid)
        assert np.array_equal(read_transmittance(path), grid)
