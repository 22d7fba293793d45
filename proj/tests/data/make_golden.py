#!/usr/bin/env python3
"""Builds the parser golden corpus with scapy.

For every protocol this writes <proto>.pcap and <proto>.jsonl. Line i of
the JSONL is the record expected for packet i, or {"error": NAME} when the
frame must be rejected. Expected values come from the construction
parameters below, never from the C++ parser.

    python3 make_golden.py [outdir]
"""

import json
import random
import struct
import sys
from pathlib import Path

from scapy.all import (Dot11, Dot11Beacon, Dot11Elt, Dot11FCS, Dot11ProbeReq, Dot11ProbeResp, NoPayload, RadioTap,
                       Raw, raw)
from scapy.layers.bluetooth4LE import (
    BTLE, BTLE_ADV, BTLE_ADV_DIRECT_IND, BTLE_ADV_IND, BTLE_ADV_NONCONN_IND, BTLE_ADV_SCAN_IND,
    BTLE_CONNECT_REQ, BTLE_DATA, BTLE_RF, BTLE_SCAN_REQ, BTLE_SCAN_RSP)
from scapy.layers.bluetooth import EIR_CompleteLocalName, EIR_Flags, EIR_Hdr, EIR_ShortenedLocalName
from scapy.config import conf

conf.dot15d4_protocol = "zigbee"
from scapy.layers.dot15d4 import Dot15d4Ack, Dot15d4Beacon, Dot15d4Cmd, Dot15d4Data, Dot15d4FCS

T0 = 1700000000000000
BCAST = "ff:ff:ff:ff:ff:ff"
BLE_ADV_AA = 0x8E89BED6

MGMT = ["assoc_req", "assoc_resp", "reassoc_req", "reassoc_resp", "probe_req", "probe_resp", "timing_adv",
        "mgmt_reserved_7", "beacon", "atim", "disassoc", "auth", "deauth", "action", "action_no_ack",
        "mgmt_reserved_15"]
CTRL = ["ctrl_reserved_0", "ctrl_reserved_1", "trigger", "tack", "beamforming_report_poll",
        "vht_ndp_announcement", "ctrl_frame_extension", "ctrl_wrapper", "block_ack_req", "block_ack", "ps_poll",
        "rts", "cts", "ack", "cf_end", "cf_end_ack"]
DATA = ["data", "data_cf_ack", "data_cf_poll", "data_cf_ack_cf_poll", "null", "cf_ack", "cf_poll",
        "cf_ack_cf_poll", "qos_data", "qos_data_cf_ack", "qos_data_cf_poll", "qos_data_cf_ack_cf_poll", "qos_null",
        "data_reserved_13", "qos_cf_poll", "qos_cf_ack_cf_poll"]
ADV = ["adv_ind", "adv_direct_ind", "adv_nonconn_ind", "scan_req", "scan_rsp", "connect_req", "adv_scan_ind",
       "adv_ext_ind", "aux_connect_rsp"] + [f"adv_reserved_{i}" for i in range(9, 16)]
LLID = ["ll_reserved", "ll_data_continuation", "ll_data_start", "ll_control"]

rng = random.Random(20240611)


def rand_mac(local=True):
    o = [rng.randrange(256) for _ in range(6)]
    if local:
        o[0] = (o[0] & 0xFC) | 0x02
    return ":".join(f"{b:02x}" for b in o)


def ext_addr(v):
    return ":".join(f"{(v >> (56 - 8 * i)) & 0xff:02x}" for i in range(8))


def short_addr(v):
    return f"0x{v:04x}"


def record(proto, **fields):
    out = {"protocol": proto}
    out.update({k: v for k, v in fields.items() if v is not None})
    return out


# --- WiFi (radiotap) --------------------------------------------------------

def wifi_channel_mhz(ch):
    if ch == 14:
        return 2484
    if ch <= 13:
        return 2412 + 5 * (ch - 1)
    return 5000 + 5 * ch


def radiotap(channel=None, rssi=None, fcs=False, tsft=False, rate=None):
    present, kw = ["Flags"], {"Flags": "FCS" if fcs else 0}
    if tsft:
        present.insert(0, "TSFT")
        kw["mac_timestamp"] = 123456789
    if rate is not None:
        present.append("Rate")
        kw["Rate"] = rate
    if channel is not None:
        present.append("Channel")
        kw["ChannelFrequency"] = wifi_channel_mhz(channel)
        kw["ChannelFlags"] = "2GHz" if channel <= 14 else "5GHz"
    if rssi is not None:
        present.append("dBm_AntSignal")
        kw["dBm_AntSignal"] = rssi
    return RadioTap(present="+".join(present), **kw)


def wifi_cases():
    cases = []
    ap, sta, gw = rand_mac(), rand_mac(), rand_mac()

    def add(rt, frame, kind=None, subtype=None, src=None, dst=None, ssid=None, error=None, fcs=False):
        pkt = rt / frame
        body = raw(pkt)[struct.unpack_from("<H", raw(pkt), 2)[0]:]
        if error:
            cases.append((pkt, {"error": error}))
            return
        cases.append((pkt, dict(kind=kind, subtype=subtype, src=src, dst=dst, ssid=ssid,
                                length_bytes=len(body), channel=rt_channel(rt) if "Channel" in rt.present else None,
                                rssi_dbm=rt_rssi(rt))))

    def beacon(ssid_elts, a2=ap, order=False, prot=False, fcs=False, subtype=8, dst=BCAST):
        hdr = (Dot11FCS if fcs else Dot11)(type=0, subtype=subtype, addr1=dst, addr2=a2, addr3=a2,
                                            FCfield=(0x80 if order else 0) | (0x40 if prot else 0))
        body = Dot11Beacon(cap="ESS") if subtype == 8 else Dot11ProbeResp(cap="ESS")
        if order:
            body = Raw(b"\x00\x00\x00\x00") / body  # HT control
        for e in ssid_elts:
            body = body / e
        return hdr / body

    rates = Dot11Elt(ID=1, info=b"\x82\x84\x8b\x96")
    add(radiotap(6, -42), beacon([Dot11Elt(ID=0, info=b"HomeNet"), rates]), "management", "beacon", ap, BCAST, "HomeNet")
    add(radiotap(11, -55, fcs=True), beacon([Dot11Elt(ID=0, info=b"FcsNet")], fcs=True), "management", "beacon", ap,
        BCAST, "FcsNet")
    add(radiotap(1, -60), beacon([Dot11Elt(ID=0, info=b"")]), "management", "beacon", ap, BCAST, "<hidden>")
    add(radiotap(1, -61), beacon([Dot11Elt(ID=0, info=b"\x00" * 7)]), "management", "beacon", ap, BCAST, "<hidden>")
    add(radiotap(3, -62), beacon([Dot11Elt(ID=0, info=b"Caf\xe9 Net")]), "management", "beacon", ap, BCAST,
        b"Caf\xe9 Net".decode("utf-8", "replace"))
    add(radiotap(3, -63), beacon([Dot11Elt(ID=0, info="Café☕".encode())]), "management", "beacon", ap, BCAST, "Café☕")
    add(radiotap(3), beacon([Dot11Elt(ID=0, info=b'q"uo\\te\x01\n')]), "management", "beacon", ap, BCAST,
        'q"uo\\te\x01\n')
    add(radiotap(4, -50), beacon([Dot11Elt(ID=0, info=b"S" * 32)]), "management", "beacon", ap, BCAST, "S" * 32)
    add(radiotap(5, -50), beacon([rates, Dot11Elt(ID=3, info=b"\x05"), Dot11Elt(ID=0, info=b"Later")]),
        "management", "beacon", ap, BCAST, "Later")
    add(radiotap(5, -50), beacon([rates]), "management", "beacon", ap, BCAST, None)
    add(radiotap(6, -44), beacon([Dot11Elt(ID=0, info=b"Prot")], prot=True), "management", "beacon", ap, BCAST, None)
    add(radiotap(6, -44), beacon([Dot11Elt(ID=0, info=b"Ordered")], order=True), "management", "beacon", ap, BCAST,
        "Ordered")
    add(radiotap(6, -48), beacon([Dot11Elt(ID=0, info=b"HomeNet")], subtype=5, dst=sta), "management", "probe_resp",
        ap, sta, "HomeNet")
    add(radiotap(6, -49),
        Dot11(type=0, subtype=4, addr1=BCAST, addr2=sta, addr3=BCAST) / Dot11ProbeReq() / Dot11Elt(ID=0, info=b"Neighbor"),
        "management", "probe_req", sta, BCAST, "Neighbor")
    add(radiotap(6, -49), Dot11(type=0, subtype=4, addr1=BCAST, addr2=sta, addr3=BCAST) / Dot11ProbeReq() /
        Dot11Elt(ID=0, info=b"") / rates, "management", "probe_req", sta, BCAST, None)
    add(radiotap(6, -49), Dot11(type=0, subtype=4, addr1=BCAST, addr2=sta, addr3=BCAST) / Dot11ProbeReq() / rates,
        "management", "probe_req", sta, BCAST, None)
    add(radiotap(6), Dot11(type=0, subtype=0, addr1=ap, addr2=sta, addr3=ap) / Raw(b"\x01\x00\x0a\x00") /
        Dot11Elt(ID=0, info=b"HomeNet"), "management", "assoc_req", sta, ap, None)
    add(radiotap(6), Dot11(type=0, subtype=11, addr1=ap, addr2=sta, addr3=ap) / Raw(b"\x00\x00\x01\x00\x00\x00"),
        "management", "auth", sta, ap, None)
    add(radiotap(6), Dot11(type=0, subtype=12, addr1=BCAST, addr2=ap, addr3=ap) / Raw(b"\x07\x00"),
        "management", "deauth", ap, BCAST, None)
    add(radiotap(6), Dot11(type=0, subtype=13, addr1=sta, addr2=ap, addr3=ap) / Raw(b"\x7f\x00\x00"),
        "management", "action", ap, sta, None)
    add(radiotap(6, -40, fcs=True),
        Dot11FCS(type=2, subtype=8, FCfield=0x41, addr1=ap, addr2=sta, addr3=gw) / Raw(bytes(2 + 200)),
        "data", "qos_data", sta, ap)
    add(radiotap(6, -41), Dot11(type=2, subtype=0, FCfield=0x02, addr1=sta, addr2=ap, addr3=gw) / Raw(b"x" * 64),
        "data", "data", ap, sta)
    add(radiotap(6, -41), Dot11(type=2, subtype=0, FCfield=0x03, addr1=ap, addr2=sta, addr3=gw,
                                addr4=rand_mac()) / Raw(b"y" * 10), "data", "data", sta, ap)
    add(radiotap(6), Dot11(type=2, subtype=4, FCfield=0x11, addr1=ap, addr2=sta, addr3=ap), "data", "null",
        sta, ap)
    add(radiotap(6), Dot11(type=2, subtype=12, FCfield=0x01, addr1=ap, addr2=sta, addr3=ap) / Raw(b"\x00\x00"),
        "data", "qos_null", sta, ap)
    add(radiotap(6), Dot11(type=2, subtype=8, FCfield=0x02, addr1="01:00:5e:00:00:fb", addr2=ap, addr3=sta) /
        Raw(b"\x00\x00" + b"m" * 80), "data", "qos_data", ap, "01:00:5e:00:00:fb")
    add(radiotap(6, -30), Dot11(type=1, subtype=13, addr1=sta), "control", "ack", None, sta)
    add(radiotap(6, -30, fcs=True), Dot11FCS(type=1, subtype=12, addr1=ap), "control", "cts", None, ap)
    add(radiotap(6, -31), Dot11(type=1, subtype=11, addr1=ap, addr2=sta), "control", "rts", sta, ap)
    add(radiotap(6, -32), Dot11(type=1, subtype=10, ID=0xC001, addr1=ap, addr2=sta), "control", "ps_poll", sta, ap)
    add(radiotap(6), Dot11(type=1, subtype=9, addr1=sta, addr2=ap) / Raw(b"\x05\x00\x10\x00" + bytes(8)),
        "control", "block_ack", ap, sta)
    add(radiotap(6), Raw(bytes([0x74, 0x00, 0, 0]) + bytes.fromhex(ap.replace(":", "")) + b"\xd4\x00" + bytes(4) +
                         bytes(10)), "control", "ctrl_wrapper", None, ap)
    add(radiotap(6, -52, tsft=True, rate=2), beacon([Dot11Elt(ID=0, info=b"Aligned")]), "management", "beacon", ap,
        BCAST, "Aligned")
    add(radiotap(None, None), Dot11(type=1, subtype=13, addr1=ap), "control", "ack", None, ap)
    add(radiotap(36, -70), beacon([Dot11Elt(ID=0, info=b"Five")]), "management", "beacon", ap, BCAST, "Five")
    add(radiotap(13, -71), beacon([Dot11Elt(ID=0, info=b"Thirteen")]), "management", "beacon", ap, BCAST,
        "Thirteen")
    for i in range(6):
        a, b = rand_mac(), rand_mac()
        n = rng.randrange(0, 1500)
        add(radiotap(rng.randrange(1, 14), -rng.randrange(20, 90)),
            Dot11(type=2, subtype=8, FCfield=0x01, addr1=a, addr2=b, addr3=gw) / Raw(bytes(2) + rng.randbytes(n)),
            "data", "qos_data", b, a)

    # Rejections
    add(radiotap(6), Raw(b"\x80\x00\x00\x00" + b"\xff" * 5), error="TruncatedFrame")
    add(radiotap(6), Raw(b"\x0c\x00" + bytes(22)), error="UnknownType")
    add(radiotap(6), Raw(b"\x80\x00" + bytes(18)), error="TruncatedFrame")
    add(radiotap(6), Dot11(type=0, subtype=8, addr1=BCAST, addr2=ap, addr3=ap) / Raw(bytes(8)), error="TruncatedFrame")
    add(radiotap(6), Dot11(type=0, subtype=8, addr1=BCAST, addr2=ap, addr3=ap) / Raw(bytes(12) + b"\x00\x09abc"),
        error="MalformedElement")
    add(radiotap(6), Dot11(type=0, subtype=8, addr1=BCAST, addr2=ap, addr3=ap) / Raw(bytes(12) + b"\x00\x21" + b"L" * 33),
        error="MalformedElement")
    add(radiotap(6), Dot11(type=0, subtype=8, addr1=BCAST, addr2=ap, addr3=ap) / Raw(bytes(12) + b"\x01\x01\x82\x00"),
        error="MalformedElement")
    add(radiotap(6), Dot11(type=0, subtype=4, addr1=BCAST, addr2=sta, addr3=BCAST) / Raw(b"\x00\x05ab"),
        error="MalformedElement")
    add(radiotap(6), Raw(b"\x08\x03" + bytes(26)), error="TruncatedFrame")
    add(radiotap(6, fcs=True), Raw(b"\xd4\x00" + bytes(10)), error="TruncatedFrame")
    add(radiotap(6), Raw(b"\x88\x81" + bytes(27)), error="TruncatedFrame")
    add(radiotap(6), Raw(b"\xa4\x00" + bytes(10)), error="TruncatedFrame")
    return cases


def rt_channel(rt):
    mhz = rt.ChannelFrequency
    if mhz == 2484:
        return 14
    if 2412 <= mhz < 2484:
        return (mhz - 2407) // 5
    return (mhz - 5000) // 5


def rt_rssi(rt):
    return rt.dBm_AntSignal if "dBm_AntSignal" in rt.present else None


# --- BLE (link type 256) ------------------------------------------------------

BLE_RF_OF_CHANNEL = {37: 0, 38: 12, 39: 39}


def ble_rf(ch):
    if ch in BLE_RF_OF_CHANNEL:
        return BLE_RF_OF_CHANNEL[ch]
    return ch + 1 if ch <= 10 else ch + 2


def ble_phdr(ch, rssi):
    rf = 40 if ch is None else ble_rf(ch)
    return BTLE_RF(rf_channel=rf, signal=rssi if rssi is not None else -128, sig_power_valid=rssi is not None)


def ble_cases():
    cases = []
    lock, phone, tag = "c4:11:22:33:44:55", "d7:aa:bb:cc:dd:ee", "00:1a:7d:da:71:13"

    def add(ch, rssi, link, kind=None, subtype=None, **exp):
        pkt = ble_phdr(ch, rssi) / link
        if kind is None:
            cases.append((pkt, {"error": exp["error"]}))
            return
        cases.append((pkt, dict(kind=kind, subtype=subtype, channel=ch, rssi_dbm=rssi,
                                length_bytes=len(raw(pkt)) - 10, **exp)))

    def adv(txadd, body, rxadd=0):
        return BTLE() / BTLE_ADV(TxAdd=txadd, RxAdd=rxadd) / body

    def name(n):
        return EIR_Hdr() / EIR_CompleteLocalName(local_name=n)

    def short(n):
        return EIR_Hdr() / EIR_ShortenedLocalName(local_name=n)

    flags = EIR_Hdr() / EIR_Flags(flags=["general_disc_mode", "br_edr_not_supported"])
    A = "advertising"
    add(37, -60, adv(1, BTLE_ADV_IND(AdvA=lock, data=[flags, name(b"August")])), A, "adv_ind",
        src=lock, ble_addr_type="random", ble_local_name="August")
    add(38, -61, adv(1, BTLE_ADV_IND(AdvA=lock, data=[flags, short(b"Aug")])), A, "adv_ind",
        src=lock, ble_addr_type="random", ble_local_name="Aug")
    add(39, -62, adv(0, BTLE_ADV_IND(AdvA=tag, data=[short(b"Tile"), name(b"Tile Mate")])), A, "adv_ind",
        src=tag, ble_addr_type="public", ble_local_name="Tile Mate")
    add(37, None, adv(0, BTLE_ADV_IND(AdvA=tag)), A, "adv_ind", src=tag, ble_addr_type="public")
    add(37, -70, adv(1, BTLE_ADV_NONCONN_IND(AdvA=lock, data=[name("Schloß".encode())])), A, "adv_nonconn_ind",
        src=lock, ble_addr_type="random", ble_local_name="Schloß")
    add(38, -70, adv(1, BTLE_ADV_SCAN_IND(AdvA=lock, data=[flags])), A, "adv_scan_ind", src=lock,
        ble_addr_type="random")
    add(38, -58, adv(1, BTLE_SCAN_RSP(AdvA=lock, data=[name(b"August Lock")])), A, "scan_rsp", src=lock,
        ble_addr_type="random", ble_local_name="August Lock")
    add(39, -57, adv(1, BTLE_SCAN_REQ(ScanA=phone, AdvA=lock), rxadd=1), A, "scan_req", src=phone, dst=lock,
        ble_addr_type="random")
    add(37, -66, adv(0, BTLE_ADV_DIRECT_IND(AdvA=tag, InitA=phone), rxadd=1), A, "adv_direct_ind", src=tag,
        dst=phone, ble_addr_type="public")
    for i, aa in enumerate([0x50654B2E, 0xAF9A9F12, 0x12345678]):
        cr = BTLE_CONNECT_REQ(InitA=phone, AdvA=lock, AA=aa, crc_init=0x123456 + i, win_size=2, win_offset=1,
                              interval=24, latency=0, timeout=500, chM=0x1FFFFFFFFF >> i, hop=5 + i, SCA=1)
        add(37 + i, -55, adv(1, cr, rxadd=1), A, "connect_req", src=phone, dst=lock, ble_addr_type="random",
            ble_access_address=f"{aa:08x}")
    # Extended advertising: header length 7, flags AdvA, then AdvA reversed.
    ext = bytes([0x07, 0x01]) + bytes.fromhex(lock.replace(":", ""))[::-1]
    add(37, -50, BTLE() / Raw(bytes([0x47, len(ext)]) + ext), A, "adv_ext_ind", src=lock, ble_addr_type="random")
    add(37, -50, BTLE() / Raw(bytes([0x07, 1, 0x00])), A, "adv_ext_ind", ble_addr_type="public")
    add(37, -49, BTLE() / Raw(bytes([0x09, 0])), A, "adv_reserved_9", ble_addr_type="public")
    adv_payload = bytes.fromhex(tag.replace(":", ""))[::-1] + bytes([5, 0x09]) + b"Hue!" + b"\x00" + b"\xff\x07"
    add(37, -48, BTLE() / Raw(bytes([0x02, len(adv_payload)]) + adv_payload), A, "adv_nonconn_ind", src=tag,
        ble_addr_type="public", ble_local_name="Hue!")
    add(38, -48, adv(1, BTLE_ADV_IND(AdvA=lock, data=[name(b"Lock\xc3\x28")])), A, "adv_ind", src=lock,
        ble_addr_type="random", ble_local_name=b"Lock\xc3\x28".decode("utf-8", "replace"))
    conn_aa = 0x50654B2E
    for ch, llid, payload in [(5, 2, b"\x0c\x00\x04\x00" + b"hello!!!"), (6, 1, b""), (21, 3, b"\x02\x13"),
                              (0, 0, b"\x01"), (36, 3, b"\x0c\x09\x0f\x00\x01\x00"), (10, 2, bytes(27))]:
        add(ch, -65, BTLE(access_addr=conn_aa) / BTLE_DATA(LLID=llid) / Raw(payload),
            "data_control" if llid == 3 else "data", LLID[llid], ble_access_address=f"{conn_aa:08x}")
    add(None, -64, adv(0, BTLE_ADV_IND(AdvA=tag)), A, "adv_ind", src=tag, ble_addr_type="public")
    add(None, None, BTLE(access_addr=0x11223344) / BTLE_DATA(LLID=1), "data", "ll_data_continuation",
        ble_access_address="11223344")
    for i in range(6):
        aa = rng.getrandbits(32) | 1
        llid = rng.choice([1, 2, 3])
        ch = rng.randrange(0, 37)
        add(ch, -rng.randrange(30, 95), BTLE(access_addr=aa) / BTLE_DATA(LLID=llid, SN=i & 1) /
            Raw(rng.randbytes(rng.randrange(0, 28))), "data_control" if llid == 3 else "data", LLID[llid],
            ble_access_address=f"{aa:08x}")

    # Rejections
    add(37, -60, Raw(b"\xd6\xbe\x89\x8e\x00\x00\x00\x00"), error="TruncatedFrame")
    add(37, -60, Raw(b"\xd6\xbe\x89\x8e\x40\x09" + bytes(6) + b"\x00\x00\x00"), error="BadLength")
    add(37, -60, Raw(b"\xd6\xbe\x89\x8e\x40\x04" + bytes(4) + b"\x00\x00\x00"), error="TruncatedFrame")
    add(37, -60, Raw(b"\xd6\xbe\x89\x8e\x45\x14" + bytes(20) + b"\x00\x00\x00"), error="TruncatedFrame")
    add(37, -60, Raw(b"\xd6\xbe\x89\x8e\x43\x06" + bytes(6) + b"\x00\x00\x00"), error="TruncatedFrame")
    bad_ad = bytes(6) + b"\x09\x09abc"
    add(37, -60, Raw(b"\xd6\xbe\x89\x8e\x40" + bytes([len(bad_ad)]) + bad_ad + b"\x00\x00\x00"), error="BadLength")
    add(37, -60, Raw(b"\xd6\xbe\x89\x8e\x47\x02\x05\x01\x00\x00\x00"), error="BadLength")
    add(37, -60, Raw(b"\xd6\xbe\x89\x8e\x47\x04\x03\x01\x00\x00\x00\x00\x00"), error="BadLength")
    add(5, -60, Raw(b"\x2e\x4b\x65\x50\x02\x05ab\x00\x00\x00"), error="BadLength")
    return cases


# --- 802.15.4 (link type 195, FCS included) ----------------------------------

def zigbee_cases():
    cases = []

    def add(frame, kind=None, src=None, dst=None, pan=None, error=None):
        if error:
            cases.append((frame, {"error": error}))
            return
        cases.append((frame, dict(kind=kind, subtype=kind, src=src, dst=dst,
                                  pan_id=None if pan is None else f"{pan:04x}", length_bytes=len(raw(frame)))))

    hue = 0x1A62
    bridge, bulb, longa = 0x0000, 0x4A21, 0x0017880100E5F1C2
    add(Dot15d4FCS(fcf_frametype=1, fcf_panidcompress=1, fcf_ackreq=1, fcf_destaddrmode=2, fcf_srcaddrmode=2,
                   seqnum=1) / Dot15d4Data(dest_panid=hue, dest_addr=bulb, src_addr=bridge) / Raw(b"\x48\x02"),
        "data", short_addr(bridge), short_addr(bulb), hue)
    add(Dot15d4FCS(fcf_frametype=1, fcf_panidcompress=1, fcf_destaddrmode=2, fcf_srcaddrmode=2, seqnum=2) /
        Dot15d4Data(dest_panid=hue, dest_addr=0xFFFF, src_addr=bridge) / Raw(b"\x08\x00\xfc\xff"),
        "data", short_addr(bridge), "0xffff", hue)
    add(Dot15d4FCS(fcf_frametype=1, fcf_panidcompress=1, fcf_destaddrmode=2, fcf_srcaddrmode=3, seqnum=3) /
        Dot15d4Data(dest_panid=hue, dest_addr=bridge, src_addr=longa) / Raw(b"hi"),
        "data", ext_addr(longa), short_addr(bridge), hue)
    add(Dot15d4FCS(fcf_frametype=1, fcf_panidcompress=1, fcf_destaddrmode=3, fcf_srcaddrmode=3, seqnum=4) /
        Dot15d4Data(dest_panid=hue, dest_addr=0x00124B0001020304, src_addr=longa),
        "data", ext_addr(longa), ext_addr(0x00124B0001020304), hue)
    add(Dot15d4FCS(fcf_frametype=1, fcf_panidcompress=0, fcf_destaddrmode=2, fcf_srcaddrmode=2, seqnum=5) /
        Dot15d4Data(dest_panid=0xABCD, dest_addr=bulb, src_panid=hue, src_addr=bridge) / Raw(b"x"),
        "data", short_addr(bridge), short_addr(bulb), 0xABCD)
    add(Dot15d4FCS(fcf_frametype=2, fcf_destaddrmode=0, fcf_srcaddrmode=0, seqnum=1) / Dot15d4Ack(), "ack")
    add(Dot15d4FCS(fcf_frametype=2, fcf_destaddrmode=0, fcf_srcaddrmode=0, seqnum=200) / Dot15d4Ack(), "ack")
    add(Dot15d4FCS(fcf_frametype=0, fcf_destaddrmode=0, fcf_srcaddrmode=2, seqnum=9) /
        Dot15d4Beacon(src_panid=hue, src_addr=bridge), "beacon", short_addr(bridge), None, hue)
    add(Dot15d4FCS(fcf_frametype=0, fcf_destaddrmode=0, fcf_srcaddrmode=3, seqnum=9) /
        Dot15d4Beacon(src_panid=0x0F00, src_addr=longa, sf_assocpermit=1), "beacon", ext_addr(longa), None, 0x0F00)
    add(Dot15d4FCS(fcf_frametype=3, fcf_panidcompress=0, fcf_ackreq=1, fcf_destaddrmode=2, fcf_srcaddrmode=3,
                   seqnum=11) / Dot15d4Cmd(dest_panid=hue, dest_addr=bridge, src_panid=0xFFFF, src_addr=longa,
                                           cmd_id=1) / Raw(b"\x8e"),
        "mac_command", ext_addr(longa), short_addr(bridge), hue)
    add(Dot15d4FCS(fcf_frametype=3, fcf_panidcompress=1, fcf_destaddrmode=2, fcf_srcaddrmode=2, seqnum=12) /
        Dot15d4Cmd(dest_panid=hue, dest_addr=bridge, src_addr=bulb, cmd_id=4),
        "mac_command", short_addr(bulb), short_addr(bridge), hue)
    add(Dot15d4FCS(fcf_frametype=3, fcf_destaddrmode=2, fcf_srcaddrmode=0, seqnum=13) /
        Dot15d4Cmd(dest_panid=0xFFFF, dest_addr=0xFFFF, cmd_id=7), "mac_command", None, "0xffff", 0xFFFF)
    # Source only, PAN ID compression set: the source PAN is still carried.
    add(Dot15d4FCS(fcf_frametype=1, fcf_panidcompress=1, fcf_destaddrmode=0, fcf_srcaddrmode=2, seqnum=14) /
        Raw(struct.pack("<HH", hue, bulb) + b"data"), "data", short_addr(bulb), None, hue)
    add(Dot15d4FCS(fcf_frametype=1, fcf_destaddrmode=2, fcf_srcaddrmode=0, seqnum=15) /
        Raw(struct.pack("<HH", hue, bulb) + b"ping"), "data", None, short_addr(bulb), hue)
    add(Dot15d4FCS(fcf_frametype=1, fcf_panidcompress=1, fcf_security=1, fcf_destaddrmode=2, fcf_srcaddrmode=2,
                   seqnum=16) / Raw(struct.pack("<HHH", hue, bulb, bridge) + b"\x05\x01\x00\x00\x00" + b"enc"),
        "data", short_addr(bridge), short_addr(bulb), hue)
    add(Dot15d4FCS(fcf_frametype=1, fcf_framever=1, fcf_panidcompress=1, fcf_destaddrmode=2, fcf_srcaddrmode=2,
                   seqnum=17) / Dot15d4Data(dest_panid=hue, dest_addr=bulb, src_addr=bridge),
        "data", short_addr(bridge), short_addr(bulb), hue)
    add(Dot15d4FCS(fcf_frametype=1, fcf_destaddrmode=0, fcf_srcaddrmode=0, seqnum=18) / Raw(b"raw"), "data")
    for i in range(14):
        s, d = rng.randrange(0x10000), rng.randrange(0x10000)
        pan = rng.randrange(0x10000)
        t = rng.choice([1, 3])
        body = Dot15d4Data(dest_panid=pan, dest_addr=d, src_addr=s) if t == 1 else \
            Dot15d4Cmd(dest_panid=pan, dest_addr=d, src_addr=s, cmd_id=rng.randrange(1, 10))
        add(Dot15d4FCS(fcf_frametype=t, fcf_panidcompress=1, fcf_destaddrmode=2, fcf_srcaddrmode=2,
                       seqnum=rng.randrange(256)) / body / Raw(rng.randbytes(rng.randrange(0, 60))),
            "data" if t == 1 else "mac_command", short_addr(s), short_addr(d), pan)

    # Rejections. Raw frames get a fake FCS; it is not checked.
    add(Raw(b"\x41\x88\x01\x00"), error="TruncatedFrame")
    add(Raw(b"\x44\x88\x01\x62\x1a\x21\x4a\x00\x00\x00\x00"), error="ReservedFrameType")
    add(Raw(b"\x47\x88\x01\x62\x1a\x21\x4a\x00\x00\x00\x00"), error="ReservedFrameType")
    add(Raw(b"\x41\x84\x01\x62\x1a\x21\x4a\x00\x00\x00\x00"), error="ReservedAddressMode")
    add(Raw(b"\x41\x48\x01\x62\x1a\x21\x4a\x00\x00\x00\x00"), error="ReservedAddressMode")
    add(Raw(b"\x41\xc8\x01\x62\x1a\x21\x4a\x01\x02\x03\x00\x00"), error="TruncatedFrame")
    add(Raw(b"\x41\x88\x01\x62\x00\x00"), error="TruncatedFrame")
    add(Raw(b"\x01\x88\x01\x62\x1a\x21\x4a\x00\x00\x00\x00"), error="TruncatedFrame")
    return cases


# --- reference dissection -----------------------------------------------------
#
# Each valid frame is re-read from its on-disk bytes with scapy and the golden
# record is taken from that dissection. It must agree with the construction
# intent; frames scapy does not dissect fall back to the intent.

def utf8(b):
    return bytes(b).decode("utf-8", "replace")


def dissect_wifi(b):
    p = RadioTap(b)
    d = p.getlayer(Dot11)
    if d is None:
        return None
    out = dict(kind=["management", "control", "data"][d.type], subtype=[MGMT, CTRL, DATA][d.type][d.subtype],
               dst=d.addr1, src=d.addr2, ssid=None, length_bytes=len(b) - p.len,
               channel=rt_channel(p) if "Channel" in p.present else None, rssi_dbm=rt_rssi(p))
    if d.type == 0 and d.subtype in (4, 5, 8) and not d.FCfield.protected:
        if d.FCfield.order:
            return None  # scapy does not skip the HT control field
        elt = d.getlayer(Dot11Elt)
        while elt is not None and elt.ID != 0:
            elt = elt.payload.getlayer(Dot11Elt)
        if elt is not None:
            info = bytes(elt.info)
            if d.subtype == 4:
                out["ssid"] = utf8(info) if info else None
            else:
                out["ssid"] = "<hidden>" if not info.strip(b"\x00") else utf8(info)
    return out


def ble_channel(rf):
    if rf >= 40:
        return None
    return {0: 37, 12: 38, 39: 39}.get(rf, rf - 1 if rf <= 11 else rf - 2)


def eir_name(items):
    complete = shortened = None
    for h in items:
        if h.len == 0:
            break
        if h.type == 0x09 and complete is None:
            complete = utf8(h.payload.local_name)
        if h.type == 0x08 and shortened is None:
            shortened = utf8(h.payload.local_name)
    return complete if complete is not None else shortened


def dissect_ble(b):
    p = BTLE_RF(b)
    bt = p[BTLE]
    ch = ble_channel(p.rf_channel)
    out = dict(channel=ch, rssi_dbm=p.signal if p.sig_power_valid else None, length_bytes=len(b) - 10)
    advertising = ch in (37, 38, 39) if ch is not None else bt.access_addr == BLE_ADV_AA
    if not advertising:
        llid = p[BTLE_DATA].LLID
        out.update(kind="data_control" if llid == 3 else "data", subtype=LLID[llid],
                   ble_access_address=f"{bt.access_addr:08x}")
        return out
    a = p.getlayer(BTLE_ADV)
    if a is None:
        return None
    out.update(kind="advertising", subtype=ADV[a.PDU_type], ble_addr_type="random" if a.TxAdd else "public")
    body = a.payload
    if isinstance(body, (BTLE_ADV_IND, BTLE_ADV_NONCONN_IND, BTLE_ADV_SCAN_IND, BTLE_SCAN_RSP)):
        out.update(src=body.AdvA, ble_local_name=eir_name(body.data))
    elif isinstance(body, BTLE_SCAN_REQ):
        out.update(src=body.ScanA, dst=body.AdvA)
    elif isinstance(body, BTLE_CONNECT_REQ):
        out.update(src=body.InitA, dst=body.AdvA, ble_access_address=f"{body.AA:08x}")
    elif isinstance(body, BTLE_ADV_DIRECT_IND):
        out.update(src=body.AdvA, dst=body.InitA)
    else:
        return None
    return out


def dissect_zigbee(b):
    p = Dot15d4FCS(b)
    kind = ["beacon", "data", "ack", "mac_command"][p.fcf_frametype]
    out = dict(kind=kind, subtype=kind, length_bytes=len(b))
    if kind == "ack":
        return out
    up = p.payload
    if isinstance(up, Raw) or isinstance(up, NoPayload):
        return None
    render = lambda mode, v: short_addr(v) if mode == 2 else ext_addr(v)
    if p.fcf_destaddrmode:
        out.update(dst=render(p.fcf_destaddrmode, up.dest_addr), pan_id=f"{up.dest_panid:04x}")
    if p.fcf_srcaddrmode:
        out["src"] = render(p.fcf_srcaddrmode, up.src_addr)
        if "pan_id" not in out:
            out["pan_id"] = f"{up.src_panid:04x}"
    return out


DISSECT = {"wifi": dissect_wifi, "ble": dissect_ble, "zigbee": dissect_zigbee}


def reference(proto, pkt, intent):
    got = DISSECT[proto](raw(pkt))
    want = {k: v for k, v in intent.items() if v is not None}
    if got is None:
        return want, False
    got = {k: v for k, v in got.items() if v is not None}
    if got != want:
        raise SystemExit(f"{proto}: dissection disagrees with intent\n  scapy:  {got}\n  intent: {want}")
    return got, True


# --- output -------------------------------------------------------------------

def write_pcap(path, link_type, pkts):
    with open(path, "wb") as f:
        f.write(struct.pack("<IHHiIII", 0xA1B2C3D4, 2, 4, 0, 0, 65535, link_type))
        for i, p in enumerate(pkts):
            data = raw(p)
            ts = T0 + i * 1000
            f.write(struct.pack("<IIII", ts // 1000000, ts % 1000000, len(data), len(data)))
            f.write(data)


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent / "golden")
    out.mkdir(parents=True, exist_ok=True)
    for proto, link_type, build in [("wifi", 127, wifi_cases), ("ble", 256, ble_cases), ("zigbee", 195, zigbee_cases)]:
        cases = build()
        write_pcap(out / f"{proto}.pcap", link_type, [p for p, _ in cases])
        dissected = 0
        with open(out / f"{proto}.jsonl", "w", encoding="utf-8") as f:
            for i, (pkt, exp) in enumerate(cases):
                if "error" in exp:
                    rec = exp
                else:
                    fields, ok = reference(proto, pkt, exp)
                    dissected += ok
                    rec = record(proto, timestamp_us=T0 + i * 1000, **fields)
                f.write(json.dumps(rec, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n")
        print(f"{proto}: {len(cases)} frames, {sum('error' in e for _, e in cases)} rejected, "
              f"{dissected} taken from the scapy dissection")


if __name__ == "__main__":
    main()
