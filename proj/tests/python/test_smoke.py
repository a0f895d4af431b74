"""Smoke tests for the python bindings."""

import _simdfs as simdfs


def test_gf256_tables():
    t = simdfs.gf256.Tables.build()
    assert t.mul(0x80, 0x02) == 0x1D
    assert t.mul(5, 0) == 0
    assert t.mul(1, 0x7B) == 0x7B
    assert t.mul(7, t.inv(7)) == 1
    assert simdfs.gf256.add(0x1D, 0x11) == 0x0C


def test_rs_roundtrip():
    mat = simdfs.rs.EncodingMatrix.build(3, 2)
    assert mat.k == 3 and mat.m == 2
    data = [bytes(range(i, i + 64)) for i in range(3)]
    parity = simdfs.rs.encode_block(mat, data)
    assert len(parity) == 2

    # erase two chunks, recover from the rest
    available = [(1, data[1]), (3, parity[0]), (4, parity[1])]
    recovered = simdfs.rs.recover(mat, available)
    assert recovered == data

    inter = simdfs.rs.intermediate_parity(mat, 0, 0, data[0])
    acc = simdfs.rs.aggregate(inter, simdfs.rs.intermediate_parity(mat, 1, 0, data[1]))
    acc = simdfs.rs.aggregate(acc, simdfs.rs.intermediate_parity(mat, 2, 0, data[2]))
    assert acc == parity[0]


def test_auth_capabilities():
    ks = simdfs.auth.KeyStore(bytes(range(32)))
    cap = ks.issue(client_id=1, object_id=9, offset=0, length=4096,
                   rights=simdfs.auth.WRITE, expiry_ns=10**9)
    ok, reason = ks.validate(cap, simdfs.auth.WRITE, 9, 0, 4096, 0)
    assert ok and reason == ""
    ok, reason = ks.validate(cap, simdfs.auth.READ, 9, 0, 4096, 0)
    assert not ok and reason == "rights_mismatch"


def test_pspin_math():
    assert simdfs.pspin.capacity() == 81707
    assert simdfs.pspin.required_memory(81707) == 6291439
    assert abs(simdfs.pspin.handler_budget_ns(2048, 400e9, 32) - 1310.72) < 1e-9
    assert simdfs.pspin.hpus_needed(23018, 2048, 400e9) == 562


def test_wire_packetize():
    descs = simdfs.wire.packetize_write(8192, 2048)
    assert len(descs) == 5
    assert descs[0]["payload_len"] == 1937
    assert descs[0]["carries_dfs_headers"]
    assert sum(d["payload_len"] for d in descs) == 8192

    encoded = simdfs.wire.example_write_packet(7, 100)
    assert simdfs.wire.roundtrip(encoded) == encoded


def test_bench_scenario_and_determinism():
    row = simdfs.bench.run_config("strategy=spin_write\nsize=4096\n")
    assert row["strategy"] == "spin_write"
    assert row["latency_ns"] > 0
    assert row["hh_count"] == 1

    a = simdfs.bench.run_preset_csv("fig6", seed=3)
    b = simdfs.bench.run_preset_csv("fig6", seed=3)
    assert a == b
    assert a.splitlines()[0].startswith("strategy,mode,size_bytes")
