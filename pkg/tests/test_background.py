import numpy as np
import pytest

from redlight.background import (
    Background,
    BackgroundModel,
    Foreground,
    RING_SIZE,
    load_checkpoint,
    save_checkpoint,
    seed,
)
from redlight.images import DimensionMismatchError, GrayImage, abs_diff, mean_gray, mean_of_images

from .conftest import flat_gray, random_gray
from .oracles import replay_oracle


def _seeds(rng, w=16, h=12):
    return [random_gray(rng, w, h) for _ in range(RING_SIZE)]


class TestSeeding:
    def test_requires_five_frames(self, rng):
        with pytest.raises(ValueError):
            BackgroundModel([random_gray(rng, 8, 8) for _ in range(4)])

    def test_requires_uniform_shape(self, rng):
        imgs = [random_gray(rng, 8, 8) for _ in range(4)] + [random_gray(rng, 9, 8)]
        with pytest.raises(DimensionMismatchError):
            BackgroundModel(imgs)

    def test_requires_positive_threshold(self, rng):
        with pytest.raises(ValueError):
            BackgroundModel(_seeds(rng), d_th=0)

    def test_initial_background_is_seed_mean(self, rng):
        imgs = _seeds(rng)
        model = seed(imgs, d_th=70.0)
        assert model.current_background() == mean_of_images(imgs)
        assert model.ring == tuple(imgs)


class TestClassification:
    def test_equal_mean_diff_is_background(self):
        model = seed([flat_gray(100, 8, 8)] * 5, d_th=70.0)
        outcome = model.classify_and_update(flat_gray(170, 8, 8))  # diff exactly 70
        assert isinstance(outcome, Background)

    def test_just_above_threshold_is_foreground(self):
        model = seed([flat_gray(100, 8, 8)] * 5, d_th=70.0)
        outcome = model.classify_and_update(flat_gray(171, 8, 8))
        assert isinstance(outcome, Foreground)
        assert outcome.mean_diff == 71.0

    def test_foreground_leaves_ring_untouched(self, rng):
        imgs = _seeds(rng)
        model = seed(imgs, d_th=1.0)
        before = model.ring
        bg_before = model.current_background()
        outcome = model.classify_and_update(flat_gray(255, 16, 12))
        assert isinstance(outcome, Foreground)
        assert model.ring == before
        assert model.current_background() == bg_before

    def test_background_rolls_ring_fifo(self, rng):
        imgs = _seeds(rng)
        model = seed(imgs, d_th=300.0)  # everything accepted
        frame = random_gray(rng, 16, 12)
        model.classify_and_update(frame)
        assert model.ring == tuple(imgs[1:]) + (frame,)
        assert model.current_background() == mean_of_images(list(imgs[1:]) + [frame])

    def test_decision_uses_mean_before_update(self, rng):
        # two identical models; feeding the same frame must classify the
        # same way regardless of any later mutation of one of them
        imgs = _seeds(rng)
        a = seed(imgs, d_th=10.0)
        b = seed(imgs, d_th=10.0)
        frame = random_gray(rng, 16, 12)
        expected = mean_gray(abs_diff(frame, a.current_background()))
        outcome = a.classify_and_update(frame)
        if isinstance(outcome, Foreground):
            assert outcome.mean_diff == expected
        assert isinstance(b.classify_and_update(frame), type(outcome))

    def test_foreground_diff_image_is_abs_diff(self, rng):
        imgs = _seeds(rng)
        model = seed(imgs, d_th=0.5)
        frame = random_gray(rng, 16, 12)
        bg = model.current_background()
        outcome = model.classify_and_update(frame)
        assert isinstance(outcome, Foreground)
        assert outcome.diff == abs_diff(frame, bg)

    def test_rejects_mismatched_frame(self, rng):
        model = seed(_seeds(rng), d_th=70.0)
        with pytest.raises(DimensionMismatchError):
            model.classify_and_update(flat_gray(0, 5, 5))


class TestReplayAgainstOracle:
    def test_sixty_frame_replay_exact(self, rng):
        w, h = 12, 9
        seeds = [random_gray(rng, w, h) for _ in range(5)]
        # alternate frames near the seed mean with frames far from it
        frames = []
        for i in range(60):
            if i % 3 == 2:
                frames.append(flat_gray(rng.randint(200, 256), w, h))
            else:
                base = seeds[0].pixels.astype(np.int32)
                delta = rng.randint(-30, 31, size=(h, w))
                frames.append(GrayImage(np.clip(base + delta, 0, 255).astype(np.uint8)))

        d_th = 70.0
        expect_cls, expect_rings, expect_means = replay_oracle(
            [s.pixels.tolist() for s in seeds], [f.pixels.tolist() for f in frames], d_th
        )

        model = seed(seeds, d_th=d_th)
        for i, frame in enumerate(frames):
            outcome = model.classify_and_update(frame)
            got = "fg" if isinstance(outcome, Foreground) else "bg"
            assert got == expect_cls[i], f"frame {i} classified {got}, oracle says {expect_cls[i]}"
            assert [img.pixels.tolist() for img in model.ring] == expect_rings[i], f"ring diverged at {i}"
            assert model.current_background().pixels.tolist() == expect_means[i], f"mean diverged at {i}"


class TestCheckpoints:
    def test_round_trip(self, rng, tmp_path):
        model = seed(_seeds(rng), d_th=42.5)
        save_checkpoint(model, tmp_path / "cp", sequence_no=17)
        loaded, seq = load_checkpoint(tmp_path / "cp")
        assert seq == 17
        assert loaded.d_th == 42.5
        assert loaded.ring == model.ring
        assert loaded.current_background() == model.current_background()

    def test_detects_tampered_mean(self, rng, tmp_path):
        model = seed(_seeds(rng), d_th=70.0)
        save_checkpoint(model, tmp_path / "cp", sequence_no=1)
        mean_file = tmp_path / "cp" / "mean.pgm"
        data = bytearray(mean_file.read_bytes())
        data[-1] ^= 0xFF
        mean_file.write_bytes(bytes(data))
        with pytest.raises(ValueError):
            load_checkpoint(tmp_path / "cp")

    def test_missing_directory(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_checkpoint(tmp_path / "absent")

    def test_no_partial_checkpoint_on_disk(self, rng, tmp_path):
        # the checkpoint appears atomically under its final name
        model = seed(_seeds(rng), d_th=70.0)
        target = tmp_path / "cp"
        save_checkpoint(model, target, sequence_no=3)
        assert target.is_dir()
        assert not list(tmp_path.glob("*.tmp"))
