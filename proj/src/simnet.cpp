// SPDX-License-Identifier: Apache-2.0

#include "jellyfish/simnet.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>

#include "jellyfish/errors.hpp"

namespace jellyfish::simnet {

std::string_view to_string(Mechanism m) {
  switch (m) {
    case Mechanism::SP: return "SP";
    case Mechanism::RANDOM: return "RANDOM";
    case Mechanism::ROUND_ROBIN: return "ROUND_ROBIN";
    case Mechanism::UGAL_VANILLA: return "UGAL_VANILLA";
    case Mechanism::KSP_UGAL: return "KSP_UGAL";
    case Mechanism::KSP_ADAPTIVE: return "KSP_ADAPTIVE";
  }
  return "?";
}

Mechanism parse_mechanism(std::string_view name) {
  std::string norm;
  for (char c : name) norm.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (norm == "UGAL" || norm == "VANILLA_UGAL") return Mechanism::UGAL_VANILLA;
  for (Mechanism m : {Mechanism::SP, Mechanism::RANDOM, Mechanism::ROUND_ROBIN, Mechanism::UGAL_VANILLA,
                      Mechanism::KSP_UGAL, Mechanism::KSP_ADAPTIVE})
    if (to_string(m) == norm) return m;
  throw ConfigError("unknown routing mechanism '" + std::string(name) + "'");
}

void SimConfig::validate() const {
  if (channel_latency < 1) throw ConfigError("channel_latency must be at least 1 cycle");
  if (router_delay < 1) throw ConfigError("router_delay must be at least 1 cycle");
  if (!(router_speedup >= 1.0)) throw ConfigError("router_speedup must be >= 1");
  if (flits_per_packet != 1) throw ConfigError("only single-flit packets are modelled");
  if (vc_count < 0) throw ConfigError("vc_count must be non-negative");
  if (buffer_per_vc < 1) throw ConfigError("buffer_per_vc must be positive");
  if (warmup_cycles < 0 || sample_cycles < 1 || samples < 1) throw ConfigError("bad measurement window");
  if (!(saturation_latency > 0)) throw ConfigError("saturation_latency must be positive");
  if (!(injection_rate >= 0.0 && injection_rate <= 1.0)) throw ConfigError("injection_rate must lie in [0, 1]");
  if (ugal_bias < 0) throw ConfigError("ugal_bias must be non-negative");
  if (packet_bytes == 0 || !(link_bandwidth > 0)) throw ConfigError("bad packet size or link bandwidth");
}

int estimate_latency(PathView path, const QueueState& queues) {
  if (path.size() < 2) return 0;
  return static_cast<int>(pathsel::hop_count(path)) * queues.occupancy(path[0], path[1]);
}

RouteChoice choose_route(Mechanism m, SwitchId src, SwitchId dst, const PathSet& ps, const QueueState& queues,
                         RoundRobinCursors& cursors, Rng& rng, int ugal_bias) {
  const std::size_t n = ps.path_count(src, dst);
  if (n == 0) throw NoPath("no path for switch pair " + std::to_string(src) + " -> " + std::to_string(dst));
  switch (m) {
    case Mechanism::SP:
      return {0};
    case Mechanism::RANDOM:
      return {rng.uniform(n)};
    case Mechanism::ROUND_ROBIN:
      return {cursors.advance(src, dst, n)};
    case Mechanism::UGAL_VANILLA: {
      const std::size_t switches = ps.switch_count();
      if (switches < 3) return {0};
      auto mid = static_cast<SwitchId>(rng.uniform(switches - 2));
      const SwitchId lo = std::min(src, dst), hi = std::max(src, dst);
      if (mid >= lo) ++mid;
      if (mid >= hi) ++mid;
      if (ps.path_count(src, mid) == 0 || ps.path_count(mid, dst) == 0)
        throw NoPath("no minimal path through intermediate " + std::to_string(mid));
      PathView first = ps.path(src, mid, 0);
      const int hops = static_cast<int>(pathsel::hop_count(first) + pathsel::hop_count(ps.path(mid, dst, 0)));
      const int nonminimal = hops * queues.occupancy(src, first[1]);
      const int minimal = estimate_latency(ps.path(src, dst, 0), queues) + ugal_bias;
      if (nonminimal < minimal) return {0, mid};
      return {0};
    }
    case Mechanism::KSP_UGAL: {
      if (n == 1) return {0};
      const std::size_t alt = 1 + rng.uniform(n - 1);
      const int minimal = estimate_latency(ps.path(src, dst, 0), queues) + ugal_bias;
      return {estimate_latency(ps.path(src, dst, alt), queues) < minimal ? alt : 0};
    }
    case Mechanism::KSP_ADAPTIVE: {
      if (n == 1) return {0};
      std::size_t a = rng.uniform(n);
      std::size_t b = rng.uniform(n - 1);
      if (b >= a) ++b;
      const int ea = estimate_latency(ps.path(src, dst, a), queues);
      const int eb = estimate_latency(ps.path(src, dst, b), queues);
      if (ea != eb) return {ea < eb ? a : b};
      const std::size_t la = ps.path(src, dst, a).size(), lb = ps.path(src, dst, b).size();
      if (la != lb) return {la < lb ? a : b};
      return {std::min(a, b)};
    }
  }
  return {0};
}

std::vector<SwitchId> materialize(const PathSet& ps, SwitchId src, SwitchId dst, const RouteChoice& choice) {
  if (!choice.nonminimal()) {
    PathView p = ps.path(src, dst, choice.path_index);
    return {p.begin(), p.end()};
  }
  PathView a = ps.path(src, choice.intermediate, 0);
  PathView b = ps.path(choice.intermediate, dst, 0);
  std::vector<SwitchId> out(a.begin(), a.end());
  out.insert(out.end(), b.begin() + 1, b.end());
  return out;
}

Injection Injection::from_pattern(const traffic::TrafficPattern& pattern) {
  pattern.validate();
  Injection inj;
  inj.node_count_ = pattern.node_count;
  inj.offsets_.assign(pattern.node_count + 1, 0);
  std::vector<traffic::Demand> sorted;
  for (const auto& d : pattern.demands)
    if (d.weight > 0) sorted.push_back(d);
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.src < b.src; });
  for (const auto& d : sorted) ++inj.offsets_[d.src + 1];
  for (std::size_t i = 0; i < pattern.node_count; ++i) inj.offsets_[i + 1] += inj.offsets_[i];
  double running = 0.0;
  NodeId current = std::numeric_limits<NodeId>::max();
  for (const auto& d : sorted) {
    if (d.src != current) {
      current = d.src;
      running = 0.0;
    }
    running += d.weight;
    inj.targets_.push_back(d.dst);
    inj.cumulative_.push_back(running);
  }
  return inj;
}

Injection Injection::uniform(std::size_t node_count) {
  if (node_count < 2) throw ConfigError("uniform traffic needs at least 2 nodes");
  Injection inj;
  inj.node_count_ = node_count;
  inj.uniform_ = true;
  return inj;
}

NodeId Injection::draw(NodeId src, Rng& rng) const {
  if (uniform_) return traffic::UniformDestination(node_count_)(src, rng);
  const std::size_t begin = offsets_[src], end = offsets_[src + 1];
  if (end - begin == 1) return targets_[begin];
  const double u = rng.uniform01() * cumulative_[end - 1];
  auto it = std::upper_bound(cumulative_.begin() + static_cast<std::ptrdiff_t>(begin),
                             cumulative_.begin() + static_cast<std::ptrdiff_t>(end), u);
  auto idx = static_cast<std::size_t>(it - cumulative_.begin());
  return targets_[std::min(idx, end - 1)];
}

namespace {

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

struct Packet {
  NodeId src = 0;
  NodeId dst = 0;
  std::uint64_t created = 0;
  std::uint64_t ready = 0;   // first cycle the flit may cross the current router
  std::uint32_t hop = 0;     // links already traversed; also the VC of the next link
  std::vector<LinkId> links;
};

struct Pending {
  std::uint64_t created;
  NodeId dst;
};

struct CreditEvent {
  std::uint64_t time;
  LinkId link;
  std::uint32_t vc;
};

// Input-queued routers with per-VC FIFOs at the downstream end of every
// link, a speedup crossbar into per-link output FIFOs, one flit per cycle
// per channel and credit-based flow control. Routes are fixed at the
// source; a packet on its i-th link uses VC i.
class Network final : public QueueState {
 public:
  Network(const Topology& t, const PathSet& ps, const SimConfig& cfg)
      : topo_(t),
        g_(t.graph()),
        ps_(ps),
        cfg_(cfg),
        cursors_(t.graph().size()),
        gen_rng_(derive_seed(cfg.rng_seed, {1})),
        route_rng_(derive_seed(cfg.rng_seed, {2})) {
    cfg.validate();
    if (ps.topo_hash() != g_.content_hash()) throw ConfigError("path set belongs to a different topology");
    vcs_ = required_vcs();
    links_ = g_.link_count();
    lat_ = static_cast<std::size_t>(cfg.channel_latency);
    buf_ = static_cast<std::size_t>(cfg.buffer_per_vc);
    out_cap_ = vcs_ * buf_;
    token_cap_ = std::ceil(cfg.router_speedup);

    in_data_.assign(links_ * vcs_ * buf_, kNone);
    in_head_.assign(links_ * vcs_, 0);
    in_count_.assign(links_ * vcs_, 0);
    credits_.assign(links_ * vcs_, static_cast<int>(buf_));
    used_.assign(links_, 0);
    out_data_.assign(links_ * out_cap_, kNone);
    out_head_.assign(links_, 0);
    out_count_.assign(links_, 0);
    channel_.assign(links_ * lat_, kNone);
    in_tokens_.assign(links_, 0.0);
    out_tokens_.assign(links_, 0.0);
    util_.assign(links_, 0);
    in_links_.resize(g_.size());
    for (LinkId l = 0; l < links_; ++l) in_links_[g_.link_target(l)].push_back(l);

    nodes_ = t.node_count();
    pending_.resize(nodes_);
    head_.assign(nodes_, kNone);
    last_eject_.assign(nodes_, std::numeric_limits<std::uint64_t>::max());

    const std::size_t samples = static_cast<std::size_t>(cfg.samples);
    sample_latency_.assign(samples, 0.0);
    sample_count_.assign(samples, 0);
    if (cfg.record_path_usage) usage_.resize(g_.size() * g_.size());
    deadlock_limit_ = 4 * (2 * lat_ + static_cast<std::size_t>(cfg.router_delay)) + 16;
  }

  int occupancy(SwitchId at, SwitchId toward) const override {
    auto l = g_.link(at, toward);
    return l ? used_[*l] : 0;
  }

  void set_injection(const Injection* injection, double rate) {
    if (injection && injection->node_count() > nodes_)
      throw ConfigError("traffic has " + std::to_string(injection->node_count()) + " nodes, topology only " +
                        std::to_string(nodes_));
    injection_ = injection;
    rate_ = rate;
  }

  void post(NodeId src, NodeId dst) {
    pending_[src].push_back({now_, dst});
    ++created_;
  }

  void step() {
    const std::uint64_t t = now_;
    moved_ = false;

    while (!credit_queue_.empty() && credit_queue_.front().time <= t) {
      const CreditEvent& c = credit_queue_.front();
      ++credits_[c.link * vcs_ + c.vc];
      --used_[c.link];
      credit_queue_.pop_front();
    }

    const std::size_t slot = t % lat_;
    for (LinkId l = 0; l < links_; ++l) {
      std::uint32_t& in_channel = channel_[l * lat_ + slot];
      if (in_channel == kNone) continue;
      Packet& p = packets_[in_channel];
      push_input(l, p.hop - 1, in_channel);
      p.ready = t + static_cast<std::uint64_t>(cfg_.router_delay);
      in_channel = kNone;
      moved_ = true;
    }

    if (injection_ && rate_ > 0.0) {
      for (NodeId n = 0; n < injection_->node_count(); ++n) {
        if (!injection_->active(n) || !gen_rng_.bernoulli(rate_)) continue;
        pending_[n].push_back({t, injection_->draw(n, gen_rng_)});
        ++created_;
      }
    }

    for (SwitchId s = 0; s < g_.size(); ++s) allocate(s, t);

    const bool measuring = in_window(t);
    for (LinkId l = 0; l < links_; ++l) {
      if (out_count_[l] == 0) continue;
      channel_[l * lat_ + slot] = out_data_[l * out_cap_ + out_head_[l]];
      out_head_[l] = (out_head_[l] + 1) % out_cap_;
      --out_count_[l];
      if (measuring) ++util_[l];
      moved_ = true;
    }

    if (in_network_ > 0 && !moved_) {
      ++stall_;
      max_stall_ = std::max(max_stall_, stall_);
      if (stall_ > deadlock_limit_) deadlock_ = true;
    } else {
      stall_ = 0;
    }
    if (cfg_.check_invariants) audit();
    ++now_;
  }

  std::uint64_t now() const { return now_; }
  bool deadlocked() const { return deadlock_; }
  std::uint64_t delivered() const { return delivered_; }
  std::uint64_t last_delivery() const { return last_delivery_; }
  int vc_count() const { return static_cast<int>(vcs_); }

  // Mean latency of a completed sample, NaN if nothing arrived in it.
  double sample_mean(std::size_t i) const {
    return sample_count_[i] == 0 ? std::numeric_limits<double>::quiet_NaN()
                                 : sample_latency_[i] / static_cast<double>(sample_count_[i]);
  }

  bool sample_saturated(std::size_t i) const {
    if (sample_count_[i] == 0) return created_ > delivered_;
    return sample_mean(i) > cfg_.saturation_latency;
  }

  SimStats stats(std::size_t completed_samples) const {
    SimStats s;
    s.injection_rate = rate_;
    s.cycles = now_;
    s.injected = created_;
    s.delivered = delivered_;
    s.in_flight = created_ - delivered_;
    s.vc_count = static_cast<int>(vcs_);
    s.deadlock = deadlock_;
    s.max_stall_cycles = max_stall_;
    s.min_excess_latency = min_excess_;
    s.zero_load_exact = zero_load_exact_;
    s.below_zero_load = below_zero_load_;
    s.conservation_violations = conservation_violations_;
    s.credit_violations = credit_violations_;
    s.buffer_violations = buffer_violations_;
    s.vc_violations = vc_violations_;
    s.max_vc_occupancy = max_vc_occupancy_;
    s.max_vc_index = max_vc_index_;

    const double per_sample = static_cast<double>(nodes_) * cfg_.sample_cycles;
    double latency_sum = 0.0;
    std::uint64_t count = 0;
    for (std::size_t i = 0; i < completed_samples; ++i) {
      SampleStats ss;
      ss.delivered = sample_count_[i];
      ss.mean_latency = sample_mean(i);
      ss.accepted_throughput = static_cast<double>(sample_count_[i]) * cfg_.flits_per_packet / per_sample;
      s.saturated = s.saturated || sample_saturated(i);
      latency_sum += sample_latency_[i];
      count += sample_count_[i];
      s.samples.push_back(ss);
    }
    s.mean_latency = count == 0 ? std::numeric_limits<double>::quiet_NaN() : latency_sum / static_cast<double>(count);
    const double measured_cycles = static_cast<double>(completed_samples) * cfg_.sample_cycles;
    if (completed_samples > 0) {
      s.accepted_throughput = static_cast<double>(count) * cfg_.flits_per_packet / (static_cast<double>(nodes_) * measured_cycles);
      s.link_utilization.resize(links_);
      for (LinkId l = 0; l < links_; ++l) s.link_utilization[l] = static_cast<double>(util_[l]) / measured_cycles;
    }
    s.path_usage = usage_;
    return s;
  }

 private:
  std::size_t required_vcs() const {
    std::size_t minimal = 0;
    for (SwitchId s = 0; s < g_.size(); ++s)
      for (SwitchId d = 0; d < g_.size(); ++d)
        if (s != d && ps_.path_count(s, d) > 0) minimal = std::max(minimal, pathsel::hop_count(ps_.path(s, d, 0)));
    std::size_t longest = ps_.max_path_hops();
    if (cfg_.routing == Mechanism::SP) longest = minimal;
    if (cfg_.routing == Mechanism::UGAL_VANILLA) longest = 2 * minimal;
    std::size_t base = cfg_.vc_count > 0 ? static_cast<std::size_t>(cfg_.vc_count)
                                         : static_cast<std::size_t>(topology::diameter(g_));
    return std::max<std::size_t>({base, longest, 1});
  }

  bool in_window(std::uint64_t t) const {
    const auto start = static_cast<std::uint64_t>(cfg_.warmup_cycles);
    const auto end = start + static_cast<std::uint64_t>(cfg_.samples) * static_cast<std::uint64_t>(cfg_.sample_cycles);
    return t >= start && t < end;
  }

  void push_input(LinkId l, std::size_t vc, std::uint32_t pk) {
    if (vc >= vcs_) {
      ++vc_violations_;
      vc = vcs_ - 1;
    }
    max_vc_index_ = std::max(max_vc_index_, static_cast<int>(vc));
    const std::size_t q = l * vcs_ + vc;
    if (in_count_[q] >= buf_) {
      ++buffer_violations_;
      return;
    }
    in_data_[q * buf_ + (in_head_[q] + in_count_[q]) % buf_] = pk;
    ++in_count_[q];
    max_vc_occupancy_ = std::max(max_vc_occupancy_, in_count_[q]);
  }

  std::uint32_t start_packet(NodeId node, SwitchId s) {
    const Pending next = pending_[node].front();
    pending_[node].pop_front();
    std::uint32_t id;
    if (!free_.empty()) {
      id = free_.back();
      free_.pop_back();
    } else {
      id = static_cast<std::uint32_t>(packets_.size());
      packets_.emplace_back();
    }
    Packet& p = packets_[id];
    p.src = node;
    p.dst = next.dst;
    p.created = next.created;
    p.ready = next.created + static_cast<std::uint64_t>(cfg_.router_delay);
    p.hop = 0;
    p.links.clear();
    const SwitchId d = topo_.host_switch(next.dst);
    if (d != s) {
      const RouteChoice choice = choose_route(cfg_.routing, s, d, ps_, *this, cursors_, route_rng_, cfg_.ugal_bias);
      const auto route = materialize(ps_, s, d, choice);
      for (std::size_t i = 0; i + 1 < route.size(); ++i) p.links.push_back(*g_.link(route[i], route[i + 1]));
      if (!usage_.empty() && !choice.nonminimal()) {
        auto& counts = usage_[std::size_t{s} * g_.size() + d];
        counts.resize(ps_.path_count(s, d), 0);
        ++counts[choice.path_index];
      }
    }
    return id;
  }

  bool forward(std::uint32_t pk, std::uint64_t t) {
    Packet& p = packets_[pk];
    if (p.hop == p.links.size()) {
      if (last_eject_[p.dst] == t) return false;
      last_eject_[p.dst] = t;
      deliver(pk, t);
      moved_ = true;
      return true;
    }
    const LinkId l = p.links[p.hop];
    const std::size_t vc = std::min<std::size_t>(p.hop, vcs_ - 1);
    if (p.hop >= vcs_) ++vc_violations_;
    if (out_tokens_[l] < 1.0 || credits_[l * vcs_ + vc] == 0) return false;
    --credits_[l * vcs_ + vc];
    ++used_[l];
    out_tokens_[l] -= 1.0;
    out_data_[l * out_cap_ + (out_head_[l] + out_count_[l]) % out_cap_] = pk;
    ++out_count_[l];
    ++p.hop;
    moved_ = true;
    return true;
  }

  void allocate(SwitchId s, std::uint64_t t) {
    const auto& inputs = in_links_[s];
    for (LinkId l : inputs) in_tokens_[l] = std::min(in_tokens_[l] + cfg_.router_speedup, token_cap_);
    const LinkId out_end = g_.first_link(s) + static_cast<LinkId>(g_.degree(s));
    for (LinkId l = g_.first_link(s); l < out_end; ++l)
      out_tokens_[l] = std::min(out_tokens_[l] + cfg_.router_speedup, token_cap_);

    const std::size_t local = topo_.spec().nodes_per_switch();
    const std::size_t ports = inputs.size() + local;
    const std::size_t start = (t + s) % ports;
    const std::size_t vc_start = t % vcs_;
    for (std::size_t k = 0; k < ports; ++k) {
      const std::size_t port = (start + k) % ports;
      if (port < inputs.size()) {
        const LinkId l = inputs[port];
        for (std::size_t j = 0; j < vcs_; ++j) {
          if (in_tokens_[l] < 1.0) break;
          const std::size_t vc = (vc_start + j) % vcs_;
          const std::size_t q = l * vcs_ + vc;
          if (in_count_[q] == 0) continue;
          const std::uint32_t pk = in_data_[q * buf_ + in_head_[q]];
          if (packets_[pk].ready > t || !forward(pk, t)) continue;
          in_head_[q] = (in_head_[q] + 1) % buf_;
          --in_count_[q];
          in_tokens_[l] -= 1.0;
          credit_queue_.push_back({t + lat_, l, static_cast<std::uint32_t>(vc)});
        }
        continue;
      }
      const NodeId node = topo_.first_node(s) + static_cast<NodeId>(port - inputs.size());
      if (head_[node] == kNone) {
        if (pending_[node].empty() ||
            pending_[node].front().created + static_cast<std::uint64_t>(cfg_.router_delay) > t)
          continue;
        head_[node] = start_packet(node, s);
      }
      const std::uint32_t pk = head_[node];
      if (packets_[pk].ready > t) continue;
      ++in_network_;
      if (forward(pk, t)) {
        head_[node] = kNone;
      } else {
        --in_network_;
      }
    }
  }

  void deliver(std::uint32_t pk, std::uint64_t t) {
    const Packet& p = packets_[pk];
    const std::uint64_t latency = t - p.created;
    const std::uint64_t floor = zero_load_latency(p.links.size(), cfg_);
    if (latency < floor) {
      ++below_zero_load_;
    } else {
      min_excess_ = std::min(min_excess_, latency - floor);
      if (latency == floor) ++zero_load_exact_;
    }
    if (in_window(t)) {
      const std::size_t i = (t - static_cast<std::uint64_t>(cfg_.warmup_cycles)) / static_cast<std::uint64_t>(cfg_.sample_cycles);
      sample_latency_[i] += static_cast<double>(latency);
      ++sample_count_[i];
    }
    ++delivered_;
    --in_network_;
    last_delivery_ = t;
    free_.push_back(pk);
  }

  // Recount every packet and credit from scratch.
  void audit() {
    std::uint64_t buffered = 0;
    std::vector<std::int64_t> tally(links_ * vcs_, 0);
    for (std::size_t q = 0; q < links_ * vcs_; ++q) {
      buffered += in_count_[q];
      if (in_count_[q] > buf_ || credits_[q] < 0) ++buffer_violations_;
      tally[q] += static_cast<std::int64_t>(in_count_[q]) + credits_[q];
    }
    for (LinkId l = 0; l < links_; ++l) {
      for (std::size_t i = 0; i < out_count_[l]; ++i) {
        const Packet& p = packets_[out_data_[l * out_cap_ + (out_head_[l] + i) % out_cap_]];
        ++tally[l * vcs_ + p.hop - 1];
        ++buffered;
      }
      for (std::size_t i = 0; i < lat_; ++i) {
        const std::uint32_t pk = channel_[l * lat_ + i];
        if (pk == kNone) continue;
        ++tally[l * vcs_ + packets_[pk].hop - 1];
        ++buffered;
      }
    }
    for (const CreditEvent& c : credit_queue_) ++tally[c.link * vcs_ + c.vc];
    for (std::int64_t v : tally)
      if (v != static_cast<std::int64_t>(buf_)) ++credit_violations_;

    std::uint64_t queued = 0;
    for (NodeId n = 0; n < nodes_; ++n) queued += pending_[n].size() + (head_[n] != kNone ? 1 : 0);
    if (created_ != delivered_ + queued + buffered || buffered != in_network_) ++conservation_violations_;
  }

  const Topology& topo_;
  const Graph& g_;
  const PathSet& ps_;
  SimConfig cfg_;
  RoundRobinCursors cursors_;
  Rng gen_rng_;
  Rng route_rng_;

  std::size_t vcs_ = 1, links_ = 0, lat_ = 1, buf_ = 1, out_cap_ = 1, nodes_ = 0;
  double token_cap_ = 1.0;

  std::vector<std::uint32_t> in_data_;
  std::vector<std::size_t> in_head_, in_count_;
  std::vector<int> credits_;
  std::vector<int> used_;
  std::vector<std::uint32_t> out_data_;
  std::vector<std::size_t> out_head_, out_count_;
  std::vector<std::uint32_t> channel_;
  std::vector<double> in_tokens_, out_tokens_;
  std::vector<std::vector<LinkId>> in_links_;
  std::deque<CreditEvent> credit_queue_;

  std::vector<Packet> packets_;
  std::vector<std::uint32_t> free_;
  std::vector<std::deque<Pending>> pending_;
  std::vector<std::uint32_t> head_;
  std::vector<std::uint64_t> last_eject_;

  const Injection* injection_ = nullptr;
  double rate_ = 0.0;

  std::uint64_t now_ = 0;
  std::uint64_t created_ = 0, delivered_ = 0, in_network_ = 0, last_delivery_ = 0;
  bool moved_ = false;
  std::uint64_t stall_ = 0, max_stall_ = 0, deadlock_limit_ = 0;
  bool deadlock_ = false;

  std::vector<double> sample_latency_;
  std::vector<std::uint64_t> sample_count_;
  std::vector<std::uint64_t> util_;
  std::vector<std::vector<std::uint64_t>> usage_;

  std::uint64_t min_excess_ = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t zero_load_exact_ = 0, below_zero_load_ = 0;
  std::uint64_t conservation_violations_ = 0, credit_violations_ = 0, buffer_violations_ = 0, vc_violations_ = 0;
  std::size_t max_vc_occupancy_ = 0;
  int max_vc_index_ = -1;
};

}  // namespace

SimStats run(const Topology& t, const PathSet& ps, const SimConfig& cfg, const Injection& traffic) {
  Network net(t, ps, cfg);
  net.set_injection(&traffic, cfg.injection_rate);
  const auto warmup = static_cast<std::uint64_t>(cfg.warmup_cycles);
  const auto period = static_cast<std::uint64_t>(cfg.sample_cycles);
  const auto samples = static_cast<std::size_t>(cfg.samples);
  std::size_t completed = 0;
  while (completed < samples) {
    net.step();
    if (net.deadlocked()) break;
    if (net.now() > warmup && (net.now() - warmup) % period == 0) {
      ++completed;
      if (cfg.stop_on_saturation && net.sample_saturated(completed - 1)) break;
    }
  }
  return net.stats(completed);
}

SweepResult saturation_sweep(const Topology& t, const PathSet& ps, const SimConfig& cfg, const Injection& traffic,
                             std::span<const double> rates, bool stop_at_saturation) {
  if (!std::is_sorted(rates.begin(), rates.end())) throw ConfigError("rate grid must be ascending");
  SweepResult result;
  bool saturated = false;
  for (double rate : rates) {
    if (!(rate > 0.0 && rate <= 1.0)) throw ConfigError("rates must lie in (0, 1]");
    SimConfig point = cfg;
    point.injection_rate = rate;
    point.stop_on_saturation = point.stop_on_saturation || stop_at_saturation;
    SimStats stats = run(t, ps, point, traffic);
    result.curve.push_back({rate, stats.mean_latency, stats.accepted_throughput, stats.saturated || stats.deadlock});
    saturated = saturated || result.curve.back().saturated;
    if (!saturated) result.saturation_throughput = rate;
    result.runs.push_back(std::move(stats));
    if (saturated && stop_at_saturation) break;
  }
  return result;
}

std::vector<double> rate_grid(double first, double last, double step) {
  if (!(step > 0) || !(first > 0) || last < first) throw ConfigError("bad rate grid");
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double r = first + i * step;
    if (r > last + 1e-9) break;
    out.push_back(std::round(r * 1e6) / 1e6);
  }
  return out;
}

ReplayResult replay(const Topology& t, const PathSet& ps, const SimConfig& cfg, const traffic::Workload& mapped) {
  const auto messages = mapped.node_messages();
  Network net(t, ps, cfg);
  net.set_injection(nullptr, 0.0);

  // Interleave each node's messages packet by packet, all posted at cycle 0.
  std::vector<std::vector<std::pair<NodeId, std::uint64_t>>> outgoing(t.node_count());
  std::uint64_t total = 0;
  for (const auto& m : messages) {
    if (m.src >= t.node_count() || m.dst >= t.node_count())
      throw ConfigError("workload endpoint outside the topology");
    const std::uint64_t packets = (m.bytes + cfg.packet_bytes - 1) / cfg.packet_bytes;
    outgoing[m.src].emplace_back(m.dst, packets);
    total += packets;
  }
  for (NodeId n = 0; n < outgoing.size(); ++n) {
    bool any = true;
    while (any) {
      any = false;
      for (auto& [dst, left] : outgoing[n]) {
        if (left == 0) continue;
        net.post(n, dst);
        --left;
        any = true;
      }
    }
  }

  ReplayResult r;
  r.packets = total;
  r.vc_count = net.vc_count();
  while (net.delivered() < total) {
    net.step();
    if (net.deadlocked()) {
      r.deadlock = true;
      break;
    }
    if (net.now() > cfg.max_replay_cycles) throw Error("replay exceeded max_replay_cycles");
  }
  r.completion_cycles = net.last_delivery();
  r.completion_seconds = static_cast<double>(r.completion_cycles) * static_cast<double>(cfg.packet_bytes) / cfg.link_bandwidth;
  return r;
}

void write_csv(const SimStats& s, std::ostream& out, char delimiter, bool header) {
  const char c = delimiter;
  out.precision(8);
  if (header) out << "rate" << c << "sample" << c << "mean_latency" << c << "accepted_throughput" << '\n';
  for (std::size_t i = 0; i < s.samples.size(); ++i)
    out << s.injection_rate << c << i << c << s.samples[i].mean_latency << c << s.samples[i].accepted_throughput << '\n';
  out << s.injection_rate << c << "all" << c << s.mean_latency << c << s.accepted_throughput << '\n';
}

}  // namespace jellyfish::simnet
