use std::collections::VecDeque;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum PacketKind {
    Data,
    /// Occupies a FIFO slot and consumes capacity like data; used only to
    /// sample tunnel delay when no data is flowing.
    EmptyProbe,
    /// Served ahead of everything else without consuming capacity; collects
    /// the queue length of every link it crosses.
    PriorityProbe,
    /// Uncontrolled underlay traffic.
    Background,
}

impl PacketKind {
    pub fn is_probe(self) -> bool {
        matches!(self, PacketKind::EmptyProbe | PacketKind::PriorityProbe)
    }
}

/// A packet travelling along a fixed route of underlay links. `route` indexes
/// the engine's route table (tunnels first, then background flows) and `hop`
/// is the position of the link the packet currently waits for.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Packet {
    pub route: u32,
    pub hop: u16,
    pub commodity: u16,
    pub kind: PacketKind,
    pub inject_slot: u64,
    pub probe_sum: u64,
}

/// Per-link underlay buffer: one FIFO for everything that consumes capacity
/// and a bypass lane for priority probes.
#[derive(Clone, Debug, Default)]
pub struct LinkQueue {
    pub(crate) fifo: VecDeque<Packet>,
    pub(crate) priority: Vec<Packet>,
}

impl LinkQueue {
    pub fn push(&mut self, p: Packet) {
        if p.kind == PacketKind::PriorityProbe {
            self.priority.push(p);
        } else {
            self.fifo.push_back(p);
        }
    }

    /// Packets that occupy FIFO positions (data, empty probes, background).
    pub fn len(&self) -> usize {
        self.fifo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fifo.is_empty() && self.priority.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Packet> {
        self.priority.iter().chain(self.fifo.iter())
    }

    /// One slot of work-conserving FIFO service. Priority probes leave first,
    /// each adding the current FIFO length to its `probe_sum`, and do not count
    /// against `capacity`. Then the oldest `min(capacity, len)` packets leave.
    /// Departures are appended to `out`; returns how many FIFO packets left.
    pub fn serve(&mut self, capacity: u32, out: &mut Vec<Packet>) -> usize {
        let backlog = self.fifo.len() as u64;
        for mut p in self.priority.drain(..) {
            p.probe_sum += backlog;
            out.push(p);
        }
        let n = (capacity as usize).min(self.fifo.len());
        out.extend(self.fifo.drain(..n));
        n
    }
}

/// Free-function form of [`LinkQueue::serve`] returning the departures.
pub fn fifo_serve(queue: &mut LinkQueue, capacity: u32) -> Vec<Packet> {
    let mut out = Vec::new();
    queue.serve(capacity, &mut out);
    out
}
