"""Dumbbell-over-satellite topology builder and single-run driver.

Forward path per customer: source hosts feed the customer node over fast
access links, the customer node marks traffic through its conditioner and
forwards onto its uplink to the ground-station router, which queues onto
the satellite bottleneck behind the multi-color RED queue. The satellite
router relays to the destination ground station, which fans out to one
sink per customer. ACKs retrace the same hops over tail-drop queues and
are never reconditioned.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .config import GREEN, RED, YELLOW, ConfigError, ScenarioConfig
from .diffserv import MultiColorRedQueue, TrafficConditioner
from .metrics import CustomerStats
from .netmodel import DropTailQueue, Link, Packet, TCP_ACK, TCP_DATA, UDP
from .simcore import RunSummary, Simulator, s_to_us
from .transport import TcpReceiver, TcpRenoSender, UdpCbrSource, make_ack

TCP_START_WINDOW_US = 1_000_000   # staggered connection starts


class SourceHost:
    """Endpoint for one TCP connection; routes returning ACKs to the sender."""

    __slots__ = ("sender",)

    def __init__(self):
        self.sender: TcpRenoSender | None = None

    def receive(self, pkt: Packet, link: Link) -> None:
        if pkt.kind == TCP_ACK:
            self.sender.on_ack(pkt.seq)


class CustomerNode:
    """Marks forward traffic through the customer's conditioner and
    demultiplexes returning ACKs to the right source host."""

    __slots__ = ("customer_id", "conditioner", "uplink", "source_links")

    def __init__(self, customer_id: int, conditioner: TrafficConditioner):
        self.customer_id = customer_id
        self.conditioner = conditioner
        self.uplink: Link | None = None
        self.source_links: dict[int, Link] = {}

    def receive(self, pkt: Packet, link: Link) -> None:
        if pkt.kind == TCP_ACK:
            self.source_links[pkt.flow_id].send(pkt)
        else:
            pkt.color = self.conditioner.mark(pkt.size_bytes, link.sim.now_us)
            self.uplink.send(pkt)


class GroundStationRouter:
    """Router in front of the bottleneck; reverse side fans out per customer."""

    __slots__ = ("uplink", "customer_links")

    def __init__(self):
        self.uplink: Link | None = None
        self.customer_links: dict[int, Link] = {}

    def receive(self, pkt: Packet, link: Link) -> None:
        if pkt.kind == TCP_ACK:
            self.customer_links[pkt.customer_id].send(pkt)
        else:
            self.uplink.send(pkt)


class SatelliteRouter:
    __slots__ = ("forward_link", "reverse_link")

    def __init__(self):
        self.forward_link: Link | None = None
        self.reverse_link: Link | None = None

    def receive(self, pkt: Packet, link: Link) -> None:
        if pkt.kind == TCP_ACK:
            self.reverse_link.send(pkt)
        else:
            self.forward_link.send(pkt)


class DestinationRouter:
    """Destination ground station: fans data out to per-customer sinks."""

    __slots__ = ("sink_links", "reverse_link")

    def __init__(self):
        self.sink_links: dict[int, Link] = {}
        self.reverse_link: Link | None = None

    def receive(self, pkt: Packet, link: Link) -> None:
        if pkt.kind == TCP_ACK:
            self.reverse_link.send(pkt)
        else:
            self.sink_links[pkt.customer_id].send(pkt)


class SinkNode:
    """Per-customer traffic destination: accounts delivered bytes by color
    and acknowledges TCP segments immediately (no delayed ACK)."""

    __slots__ = ("customer_id", "stats", "receivers", "ack_link", "alloc_uid",
                 "ack_bytes")

    def __init__(self, customer_id: int, stats: CustomerStats, alloc_uid,
                 ack_bytes: int):
        self.customer_id = customer_id
        self.stats = stats
        self.receivers: dict[int, TcpReceiver] = {}
        self.ack_link: Link | None = None
        self.alloc_uid = alloc_uid
        self.ack_bytes = ack_bytes

    def receive(self, pkt: Packet, link: Link) -> None:
        self.stats.delivered_bytes[pkt.color] += pkt.size_bytes
        self.stats.delivered_packets += 1
        if pkt.kind == TCP_DATA:
            receiver = self.receivers[pkt.flow_id]
            ack_seq = receiver.on_data(pkt.seq)
            ack = make_ack(self.alloc_uid, pkt, ack_seq, link.sim.now_us,
                           self.ack_bytes)
            self.ack_link.send(ack)


@dataclass
class Topology:
    """A fully wired simulation instance for one scenario."""

    sim: Simulator
    scenario: ScenarioConfig
    links: dict[str, Link]
    red_queue: MultiColorRedQueue
    conditioners: dict[int, TrafficConditioner]
    senders: list[TcpRenoSender]
    udp_sources: list[UdpCbrSource]
    sinks: dict[int, SinkNode]
    stats: dict[int, CustomerStats] = field(default_factory=dict)

    def run(self) -> RunSummary:
        return self.sim.run(s_to_us(self.scenario.duration_s))

    def conservation_violations(self) -> list[str]:
        return [link.name for link in self.links.values()
                if not link.conservation_ok()]


def build_topology(scenario: ScenarioConfig) -> Topology:
    """Instantiate the scenario. Raises ConfigError on malformed input."""
    scenario.validate()
    sim = Simulator(master_seed=scenario.seed)
    uid_counter = itertools.count(1)
    alloc_uid = uid_counter.__next__
    qlimit = scenario.queue_limit_packets
    pkt_bytes = scenario.packet_size_bytes

    links: dict[str, Link] = {}

    def add_link(name: str, params, queue, dst) -> Link:
        link = Link(sim, name, params.bandwidth_bps, params.delay_us, queue, dst)
        links[name] = link
        return link

    r1 = GroundStationRouter()
    r2 = SatelliteRouter()
    r3 = DestinationRouter()

    red_queue = MultiColorRedQueue(
        limit=qlimit, weight=scenario.red.weight,
        params={c: scenario.red.params(c) for c in (GREEN, YELLOW, RED)},
        rng=sim.rng("red.bottleneck"),
        accounting=scenario.red.accounting,
        color_counting=scenario.red.color_counting,
        count_adjust=scenario.red.count_adjust)

    # satellite hops: RED on the forward uplink only, tail drop elsewhere
    r1.uplink = add_link("r1->r2", scenario.bottleneck, red_queue, r2)
    r2.forward_link = add_link("r2->r3", scenario.bottleneck,
                               DropTailQueue(qlimit), r3)
    r3.reverse_link = add_link("r3->r2", scenario.bottleneck,
                               DropTailQueue(qlimit), r2)
    r2.reverse_link = add_link("r2->r1", scenario.bottleneck,
                               DropTailQueue(qlimit), r1)

    conditioners: dict[int, TrafficConditioner] = {}
    senders: list[TcpRenoSender] = []
    udp_sources: list[UdpCbrSource] = []
    sinks: dict[int, SinkNode] = {}
    stats: dict[int, CustomerStats] = {}
    start_rng = sim.rng("tcp.start-times")

    for cust in scenario.customers:
        cid = cust.customer_id
        conditioner = TrafficConditioner(
            green_rate_bps=cust.green_rate_bps,
            green_capacity_bytes=cust.green_bucket_packets * pkt_bytes,
            yellow_rate_bps=cust.yellow_rate_bps,
            yellow_capacity_bytes=cust.yellow_bucket_packets * pkt_bytes)
        conditioners[cid] = conditioner
        node = CustomerNode(cid, conditioner)
        cstats = CustomerStats(customer_id=cid, kind=cust.kind,
                               duration_s=scenario.duration_s)
        stats[cid] = cstats
        sink = SinkNode(cid, cstats, alloc_uid, scenario.ack_size_bytes)
        sinks[cid] = sink

        node.uplink = add_link(f"cust{cid}->r1", scenario.customer_link,
                               DropTailQueue(qlimit), r1)
        r1.customer_links[cid] = add_link(f"r1->cust{cid}",
                                          scenario.customer_link,
                                          DropTailQueue(qlimit), node)
        r3.sink_links[cid] = add_link(f"r3->sink{cid}", scenario.customer_link,
                                      DropTailQueue(qlimit), sink)
        sink.ack_link = add_link(f"sink{cid}->r3", scenario.customer_link,
                                 DropTailQueue(qlimit), r3)

        if cust.kind == "tcp":
            for flow_id in range(cust.flows):
                host = SourceHost()
                up = add_link(f"src{cid}.{flow_id}->cust{cid}",
                              scenario.access, DropTailQueue(qlimit), node)
                node.source_links[flow_id] = add_link(
                    f"cust{cid}->src{cid}.{flow_id}", scenario.access,
                    DropTailQueue(qlimit), host)
                sender = TcpRenoSender(
                    sim, cid, flow_id, up.send, alloc_uid,
                    segment_bytes=pkt_bytes,
                    max_window=scenario.tcp_max_window)
                host.sender = sender
                sink.receivers[flow_id] = TcpReceiver()
                sender.start(round(start_rng.random() * TCP_START_WINDOW_US))
                senders.append(sender)
        else:
            up = add_link(f"src{cid}.udp->cust{cid}", scenario.access,
                          DropTailQueue(qlimit), node)
            source = UdpCbrSource(sim, cid, up.send, alloc_uid,
                                  rate_bps=cust.udp_rate_bps,
                                  packet_bytes=pkt_bytes, start_us=0)
            source.start()
            udp_sources.append(source)

    return Topology(sim=sim, scenario=scenario, links=links,
                    red_queue=red_queue, conditioners=conditioners,
                    senders=senders, udp_sources=udp_sources, sinks=sinks,
                    stats=stats)
