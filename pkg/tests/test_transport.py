import numpy as np
import pytest
import requests

from holostab._exceptions import (
    DisconnectedZones,
    DownloadError,
    MalformedHeader,
    MalformedRecord,
    MissingColumn,
    UnknownZone,
)
from holostab._fetch import fetch_tntp
from holostab._settings import Settings
from holostab.transport import (
    RoadNetwork,
    ZoneComplex,
    build_zone_complex,
    calibrate_quantile,
    degenerate_edges,
    lift_to_zones,
    new_hole_support,
    parse_tntp,
    stability_report,
    zone_times,
)

HEADER = "~ \tinit_node\tterm_node\tcapacity\tlength\tfree_flow_time\tb\tpower\tspeed\ttoll\tlink_type\t;\n"


def _net(links, zones=3, first_thru=4, header=HEADER):
    lines = [
        f"<NUMBER OF ZONES> {zones}\n",
        f"<NUMBER OF NODES> {max(max(pair[:2]) for pair in links)}\n",
        f"<FIRST THRU NODE> {first_thru}\n",
        f"<NUMBER OF LINKS> {len(links)}\n",
        "<END OF METADATA>\n",
        "\n\n",
        header,
    ]
    for init, term, time in links:
        lines.append(f"\t{init}\t{term}\t100\t1\t{time}\t0.15\t4\t0\t0\t1\t;\n")
    return "".join(lines)


def _trips(blocks, zones=3):
    lines = [f"<NUMBER OF ZONES> {zones}\n", "<TOTAL OD FLOW> 0\n", "<END OF METADATA>\n", "\n\n"]
    for origin, entries in blocks:
        lines.append(f"Origin \t{origin}\n")
        lines.append("".join(f"{dest:5d} : {value:8.2f};" for dest, value in entries) + "\n")
    return "".join(lines)


def _both_ways(*links):
    return [(i, j, t) for i, j, t in links] + [(j, i, t) for i, j, t in links]


# zones 1..3 around the hub 4; zone 2 also touches its neighbours directly
STAR_LINKS = _both_ways((1, 4, 1.0), (2, 4, 1.0), (3, 4, 1.0), (1, 2, 0.5), (2, 3, 0.5))
UNIFORM_TRIPS = [(1, [(2, 10.0), (3, 10.0)]), (2, [(1, 10.0), (3, 10.0)]), (3, [(1, 10.0), (2, 10.0)])]


@pytest.fixture
def star(tmp_path):
    net = tmp_path / "star_net.tntp"
    trips = tmp_path / "star_trips.tntp"
    net.write_text(_net(STAR_LINKS))
    trips.write_text(_trips(UNIFORM_TRIPS))
    return parse_tntp(net, trips)


def test_parse_metadata_links_and_trips(star):
    assert star.num_zones == 3
    assert star.first_thru_node == 4
    assert star.metadata["NUMBER OF LINKS"] == "10"
    assert star.links[(1, 4)] == 1.0
    assert star.demand[(2, 3)] == 10.0
    assert star.symmetric_demand(1, 3) == 20.0
    assert star.nodes == [1, 2, 3, 4]


def test_duplicate_links_keep_the_fastest(tmp_path):
    path = tmp_path / "net.tntp"
    path.write_text(_net([(1, 4, 3.0), (1, 4, 2.0), (4, 1, 1.0)], zones=1))
    assert parse_tntp(path).links[(1, 4)] == 2.0


def test_empty_origin_block(tmp_path):
    net = tmp_path / "net.tntp"
    trips = tmp_path / "trips.tntp"
    net.write_text(_net(STAR_LINKS))
    trips.write_text(_trips([(1, [(2, 5.0)])]) + "Origin 3\n\n")
    rn = parse_tntp(net, trips)
    assert rn.demand == {(1, 2): 5.0}


def test_missing_column(tmp_path):
    path = tmp_path / "net.tntp"
    path.write_text(_net(STAR_LINKS, header="~ init_node term_node capacity ;\n"))
    with pytest.raises(MissingColumn) as info:
        parse_tntp(path)
    assert info.value.column == "free_flow_time"


def test_missing_end_of_metadata(tmp_path):
    path = tmp_path / "net.tntp"
    path.write_text("<NUMBER OF ZONES> 3\n~ init_node term_node free_flow_time ;\n")
    with pytest.raises(MalformedHeader):
        parse_tntp(path)


def test_negative_link_time(tmp_path):
    path = tmp_path / "net.tntp"
    path.write_text(_net([(1, 4, -1.0)]))
    with pytest.raises(MalformedRecord):
        parse_tntp(path)


def test_unknown_zone(tmp_path):
    net = tmp_path / "net.tntp"
    trips = tmp_path / "trips.tntp"
    net.write_text(_net(STAR_LINKS))
    trips.write_text(_trips([(1, [(5, 1.0)])]))
    with pytest.raises(UnknownZone):
        parse_tntp(net, trips)


def test_paths_do_not_cross_zones(star):
    times = zone_times(star, threads=1)
    assert times[(1, 2)] == pytest.approx(0.5)
    assert times[(2, 3)] == pytest.approx(0.5)
    # 1 -> 2 -> 3 would pass through zone 2
    assert times[(1, 3)] == pytest.approx(2.0)


def test_travel_times_are_symmetrized():
    links = _both_ways((1, 3, 1.0), (2, 3, 1.0))
    links[0] = (1, 3, 3.0)
    rn = RoadNetwork(2, 3, {(i, j): t for i, j, t in links})
    assert zone_times(rn, threads=2)[(1, 2)] == pytest.approx(0.5 * (4.0 + 2.0))


def test_disconnected_zones():
    rn = RoadNetwork(3, 4, {(1, 4): 1.0, (4, 1): 1.0, (2, 4): 1.0, (4, 2): 1.0})
    with pytest.raises(DisconnectedZones):
        zone_times(rn, threads=1)


def test_degenerate_triangle_loses_its_longest_side():
    times = {(1, 2): 1.0, (2, 3): 1.0, (1, 3): 2.0}
    assert degenerate_edges(times) == {(1, 3)}
    assert degenerate_edges({(1, 2): 1.0, (2, 3): 1.0, (1, 3): 1.5}) == set()


def test_line_of_zones_has_no_triangle():
    rn = RoadNetwork(
        3,
        1,
        {(1, 2): 1.0, (2, 1): 1.0, (2, 3): 1.0, (3, 2): 1.0},
        {(1, 2): 1.0, (1, 3): 1.0, (2, 3): 1.0},
    )
    zc = lift_to_zones(rn, filter_quantile=1.0, threads=1)
    assert zc.complex.edges == [(0, 1), (1, 2)]
    assert zc.complex.n_triangles == 0


def test_uniform_demand_gives_equal_weights(star):
    zc = lift_to_zones(star, filter_quantile=1.0, threads=1)
    assert zc.complex.m == 3
    assert zc.complex.n_triangles == 1
    assert np.allclose(zc.profile.w1, np.log10(1 / 0.95))
    assert zc.profile.w1[0] == pytest.approx(0.0223, abs=1e-4)


def test_pairs_without_demand_are_dropped(star):
    star.demand = {(1, 2): 4.0, (2, 3): 1.0}
    zc = build_zone_complex(star, zone_times(star, threads=1), 1.0)
    assert [zc.complex.edge_labels(pos) for pos in range(zc.complex.m)] == [(1, 2), (2, 3)]
    assert zc.profile.w1[0] > zc.profile.w1[1] > 0


def test_quantile_filter(star):
    times = zone_times(star, threads=1)
    zc = build_zone_complex(star, times, 0.5)
    assert zc.threshold == pytest.approx(0.5)
    assert zc.complex.m == 2
    with pytest.raises(ValueError):
        build_zone_complex(star, times, 0.0)


def test_provenance_lists_every_edge(star):
    zc = lift_to_zones(star, filter_quantile=1.0, threads=1)
    sidecar = zc.provenance()
    assert sidecar["quantile"] == 1.0
    assert [entry["edge"] for entry in sidecar["edges"]] == [[1, 2], [1, 3], [2, 3]]
    assert sidecar["edges"][1]["time"] == pytest.approx(2.0)
    assert zc.document()["edge_weights"] == pytest.approx(list(zc.profile.w1))


def test_calibration_prefers_matching_counts(star):
    quantile, zc = calibrate_quantile(star, 3, 1, quantiles=(0.5, 1.0), threads=1)
    assert quantile == 1.0
    assert zc.complex.m == 3


def test_new_hole_support(showcase):
    support = new_hole_support(showcase, [showcase.edge_id(5, 6)])
    assert support
    assert [5, 6] not in support
    assert new_hole_support(showcase, []) == []


def test_stability_report_on_zone_complex(showcase, showcase_profile):
    zc = ZoneComplex(showcase, showcase_profile, np.ones(showcase.m), np.ones(showcase.m), 1.0, 1.0)
    report = stability_report(zc)
    assert report.eliminated_edges == [[5, 6]]
    assert report.percentile == pytest.approx(report.eps_star / showcase_profile.w1.sum())
    assert not report.created_from_zero
    assert report.to_dict()["result"]["converged"] is True


class _Response:
    def __init__(self, text, status=200):
        self.text = text
        self.status_code = status

    def raise_for_status(self):
        if self.status_code >= 400:
            raise requests.HTTPError(f"{self.status_code}")


def test_fetch_writes_both_files(tmp_path, monkeypatch):
    requested = []

    def fake_get(url, timeout):
        requested.append(url)
        return _Response(f"contents of {url.rsplit('/', 1)[-1]}")

    monkeypatch.setattr(requests, "get", fake_get)
    written = fetch_tntp("Anaheim", tmp_path)
    assert written["net"].read_text() == "contents of Anaheim_net.tntp"
    assert written["trips"].name == "Anaheim_trips.tntp"
    assert requested[0].endswith("/Anaheim/Anaheim_net.tntp")


def test_fetch_reports_http_errors(tmp_path, monkeypatch):
    monkeypatch.setattr(requests, "get", lambda url, timeout: _Response("Not Found", 404))
    with pytest.raises(DownloadError) as info:
        fetch_tntp("Nowhere", tmp_path)
    assert info.value.status_code == 404
    assert not list(tmp_path.iterdir())


def test_anaheim_zone_count():
    data_dir = Settings().data_dir
    net = data_dir / "Anaheim_net.tntp"
    trips = data_dir / "Anaheim_trips.tntp"
    if not (net.exists() and trips.exists()):
        pytest.skip("Anaheim TNTP files not present in HOLOSTAB_DATA_DIR")
    zc = lift_to_zones(parse_tntp(net, trips))
    assert zc.complex.n == 38


def test_default_quantile_drops_the_slowest_pair(star):
    zc = lift_to_zones(star, threads=1)
    assert zc.threshold == pytest.approx(1.7)
    assert [zc.complex.edge_labels(pos) for pos in range(zc.complex.m)] == [(1, 2), (2, 3)]
