import math
from random import Random

import pytest

from skyauth import verifier as V
from skyauth.simulator import (
    AdversarySpec,
    AircraftSpec,
    BernoulliChannel,
    BurstChannel,
    ConfigError,
    ScenarioConfig,
    load_config,
    resolve_coverage,
    run_scenario,
    sample_channel,
    validate_config,
)


class TestChannel:
    def test_p_zero_always_delivers(self):
        rng = Random(1)
        assert all(sample_channel(rng, 0.0) for _ in range(100))

    def test_p_one_never_delivers(self):
        rng = Random(1)
        assert not any(sample_channel(rng, 1.0) for _ in range(100))

    def test_empirical_loss_rate(self):
        rng = Random(123)
        n = 10 ** 6
        lost = sum(1 for _ in range(n) if not sample_channel(rng, 0.3))
        assert abs(lost / n - 0.3) < 0.002

    def test_p_out_of_range(self):
        with pytest.raises(ConfigError):
            sample_channel(Random(1), 1.5)

    def test_burst_channel_losses_cluster(self):
        channel = BurstChannel(Random(5), p_enter=0.05, p_exit=0.3)
        outcomes = [channel.deliver() for _ in range(20000)]
        losses = outcomes.count(False)
        assert losses > 0
        # count loss runs: burst losses must arrive in streaks, so the mean
        # run length has to exceed 1 clearly
        runs, current = [], 0
        for ok in outcomes:
            if not ok:
                current += 1
            elif current:
                runs.append(current)
                current = 0
        assert sum(runs) / len(runs) > 1.5

    def test_bernoulli_channel_matches_sample(self):
        c = BernoulliChannel(Random(7), 0.25)
        r = Random(7)
        assert [c.deliver() for _ in range(50)] == [sample_channel(r, 0.25) for _ in range(50)]


class TestConfigValidation:
    def test_adversary_rate_cap(self):
        config = ScenarioConfig(adversary=AdversarySpec(rate=6.5))
        with pytest.raises(ConfigError, match="adversary.rate"):
            validate_config(config)

    def test_loss_range(self):
        with pytest.raises(ConfigError, match="loss"):
            validate_config(ScenarioConfig(loss=1.2))

    def test_unknown_strategy(self):
        config = ScenarioConfig(adversary=AdversarySpec(strategy="teleport"))
        with pytest.raises(ConfigError, match="adversary.strategy"):
            validate_config(config)

    def test_duplicate_icao(self):
        config = ScenarioConfig(aircraft=(AircraftSpec(1), AircraftSpec(1)))
        with pytest.raises(ConfigError, match="duplicate"):
            validate_config(config)

    def test_coverage_resolution(self):
        assert resolve_coverage(2, 10) == 2
        assert resolve_coverage(0.2, 10) == 2
        assert resolve_coverage(0.5, 10) == 5
        assert resolve_coverage(99, 10) == 10


class TestBenignRuns:
    def test_lossless_all_authentic(self):
        report = run_scenario(ScenarioConfig(seed=1, num_slots=10))
        counts = report.verdict_counts()
        assert counts[V.AUTHENTIC] == 10
        assert report.slot_success_rate() == 1.0

    def test_measured_overhead_matches_formula(self):
        report = run_scenario(ScenarioConfig(seed=1, num_slots=10))
        # 6 security frames per 12 data frames, minus the key burst the
        # final counted slot never gets to see
        assert report.overhead_measured_percent() == pytest.approx(50.0, abs=2.0)

    def test_multiple_aircraft(self):
        config = ScenarioConfig(
            seed=3, num_slots=5,
            aircraft=(AircraftSpec(0xABC001), AircraftSpec(0xDEF002, lat0=50000)),
        )
        report = run_scenario(config)
        assert report.verdict_counts()[V.AUTHENTIC] == 10
        icaos = {r.icao for r in report.records}
        assert icaos == {0xABC001, 0xDEF002}

    def test_loss_matches_window_closed_form(self):
        p = 0.1
        slots = 4000
        report = run_scenario(
            ScenarioConfig(seed=11, num_slots=slots, antennas=1, loss=p)
        )
        expect = (1 - p) ** 15
        sigma = math.sqrt(expect * (1 - expect) / slots)
        assert abs(report.slot_success_rate() - expect) < 3 * sigma

    def test_fusion_beats_single_antenna(self):
        report = run_scenario(
            ScenarioConfig(seed=4, num_slots=300, antennas=4, loss=0.2)
        )
        server = report.server_frame_delivery()
        expect = 1 - 0.2 ** 4
        assert abs(server - expect) < 0.01
        for antenna in range(4):
            assert report.slot_success_rate() > report.antenna_slot_success(antenna)
            assert server > report.antenna_frame_delivery(antenna)


class TestAdversaryRuns:
    def test_minority_coverage_recovered_first_try(self):
        config = ScenarioConfig(
            seed=5, num_slots=20, slot_duration=1.0, antennas=10,
            adversary=AdversarySpec(strategy="ghost", rate=6.0, coverage=2),
        )
        report = run_scenario(config)
        counts = report.verdict_counts()
        assert counts[V.RECOVERED] == 20
        for record in report.records:
            assert record.verdict.subsets_tried == 1
            truth = report.ground_truth[(record.icao, record.slot)]
            assert set(record.verdict.frames) == set(truth)

    def test_filtering_disabled_still_recovers(self):
        config = ScenarioConfig(
            seed=5, num_slots=20, slot_duration=1.0, antennas=10,
            adversary=AdversarySpec(strategy="ghost", rate=6.0, coverage=2),
            majority_filtering=False,
        )
        report = run_scenario(config)
        for record in report.records:
            assert record.verdict.status == V.RECOVERED
            assert record.verdict.subsets_tried <= math.comb(12, 6)
            truth = report.ground_truth[(record.icao, record.slot)]
            assert set(record.verdict.frames) == set(truth)

    def test_equal_coverage_dos_rejects_everything(self):
        config = ScenarioConfig(
            seed=6, num_slots=10, slot_duration=1.0, antennas=6,
            adversary=AdversarySpec(strategy="dos", rate=6.0, coverage=6),
        )
        report = run_scenario(config)
        counts = report.verdict_counts()
        assert counts[V.REJECTED] == 10
        assert counts[V.AUTHENTIC] == counts[V.RECOVERED] == 0
        for record in report.records:
            assert not record.verdict.frames

    def test_no_verdict_ever_contains_injected_frames(self):
        for strategy, coverage in (("ghost", 3), ("dos", 6), ("ghost", 6)):
            config = ScenarioConfig(
                seed=8, num_slots=10, slot_duration=1.0, antennas=6,
                adversary=AdversarySpec(strategy=strategy, rate=6.0, coverage=coverage),
            )
            report = run_scenario(config)
            for record in report.records:
                truth = set(report.ground_truth.get((record.icao, record.slot), ()))
                assert set(record.verdict.frames) <= truth

    def test_fakes_reach_only_covered_antennas(self):
        config = ScenarioConfig(
            seed=9, num_slots=4, slot_duration=1.0, antennas=5,
            adversary=AdversarySpec(strategy="ghost", rate=6.0, coverage=2),
        )
        report = run_scenario(config, keep_observations=True)
        legit = {f for frames in report.ground_truth.values() for f in frames}
        from skyauth import frame_codec

        for obs in report.observations:
            fake = obs.frame not in legit and not frame_codec.decode_frame(obs.frame).is_security
            if fake:
                assert obs.antenna_id < 2


class TestDeterminism:
    def test_identical_reports(self, tmp_path):
        config = ScenarioConfig(seed=12, num_slots=15, antennas=3, loss=0.1)
        p1, p2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        run_scenario(config).write_report_csv(p1)
        run_scenario(config).write_report_csv(p2)
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_offline_verify_reproduces_run(self, tmp_path):
        config = ScenarioConfig(
            seed=13, num_slots=12, slot_duration=1.0, antennas=8, loss=0.05,
            adversary=AdversarySpec(strategy="ghost", rate=4.0, coverage=2),
        )
        report = run_scenario(config, keep_observations=True)
        feed_path = str(tmp_path / "feed.bin")
        V.write_feed(report.observations, feed_path)
        registry = {
            icao: ann for icao, ann in _registry_of(report).items()
        }
        community = V.CommunityVerifier(registry)
        for obs in V.read_feed(feed_path):
            community.ingest(obs)
        replayed = community.finalize_all()
        assert [r.csv_row() for r in replayed] == [r.csv_row() for r in report.records]


def _registry_of(report):
    """Rebuild the registry the run used (provisioning is seed-determined)."""
    from skyauth.authority import provision
    from random import Random

    master = Random(report.config.seed)
    registry = {}
    for spec in report.config.aircraft:
        seed = master.getrandbits(64)
        _, ann = provision(
            spec.icao, 0.0,
            n=report.config.chain_length or report.config.num_slots + 2,
            seed=seed,
            slot_duration=report.config.slot_duration,
            data_rate=report.config.data_rate,
        )
        registry[spec.icao] = ann
    return registry


class TestConfigFile:
    CONFIG = """
[scenario]
seed = 21
slots = 6

[protocol]
slot_duration = 1.0
data_rate = 6

[channel]
antennas = 4
model = iid
loss = 0.0

[adversary]
strategy = ghost
rate = 5
coverage = 1

[aircraft:ABC001]
lat0 = 20000
lon0 = 40000
"""

    def test_load_and_run(self, tmp_path):
        path = tmp_path / "scenario.ini"
        path.write_text(self.CONFIG)
        config = load_config(str(path))
        assert config.seed == 21
        assert config.num_slots == 6
        assert config.adversary.rate == 5.0
        assert config.aircraft[0].icao == 0xABC001
        report = run_scenario(config)
        assert len(report.records) == 6

    def test_missing_aircraft_section(self, tmp_path):
        path = tmp_path / "scenario.ini"
        path.write_text("[scenario]\nseed = 1\n")
        with pytest.raises(ConfigError, match="aircraft"):
            load_config(str(path))

    def test_bad_field_named(self, tmp_path):
        path = tmp_path / "scenario.ini"
        path.write_text(self.CONFIG.replace("loss = 0.0", "loss = maybe"))
        with pytest.raises(ConfigError, match="channel.loss"):
            load_config(str(path))

    def test_adversary_disabled_flag(self, tmp_path):
        path = tmp_path / "scenario.ini"
        path.write_text(self.CONFIG.replace("[adversary]", "[adversary]\nenabled = false"))
        config = load_config(str(path))
        assert config.adversary is None
