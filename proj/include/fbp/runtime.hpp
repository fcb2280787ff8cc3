#pragma once

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "fbp/propagation.hpp"
#include "fbp/stream.hpp"

namespace fbp {

class PlanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OperatorCounters {
  std::uint64_t tuples_in = 0;
  std::uint64_t tuples_out = 0;
  std::uint64_t puncts_in = 0;
  std::uint64_t puncts_out = 0;
  std::uint64_t feedback_received = 0;
  std::uint64_t feedback_sent = 0;
  std::uint64_t guard_drops = 0;
  std::uint64_t state_purged = 0;
  std::uint64_t work_units = 0;

  friend bool operator==(const OperatorCounters&, const OperatorCounters&) = default;
};

// How far an operator may go in acting on assumed feedback. Each level
// includes the ones before it.
enum class FeedbackResponse { ignore, guard_output, guard_input, propagate };

inline FeedbackResponse parse_feedback_response(std::string_view s) {
  if (s == "ignore" || s == "off") return FeedbackResponse::ignore;
  if (s == "output") return FeedbackResponse::guard_output;
  if (s == "input") return FeedbackResponse::guard_input;
  if (s == "propagate" || s == "on") return FeedbackResponse::propagate;
  throw std::invalid_argument("unknown feedback response '" + std::string(s) + "'");
}

enum class CostMode { virtual_units, wallclock };
enum class SchedulerKind { deterministic, concurrent };

class OperatorContext;

// Operator contract. The engine guarantees that no two callbacks of one
// operator run concurrently and that pending feedback is delivered before the
// next data page.
class Operator {
 public:
  explicit Operator(std::vector<SchemaPtr> inputs) : inputs_(std::move(inputs)) {}
  virtual ~Operator() = default;

  virtual std::string_view kind() const = 0;
  const std::vector<SchemaPtr>& input_schemas() const { return inputs_; }
  virtual std::size_t num_outputs() const { return 1; }
  virtual SchemaPtr output_schema(std::size_t port = 0) const = 0;

  // Unaware operators never see feedback; the engine discards it.
  virtual bool feedback_aware() const { return false; }

  virtual void start(OperatorContext&) {}
  virtual void process(std::size_t input, StreamItem item, OperatorContext& ctx) = 0;
  virtual void on_feedback(std::size_t /*port*/, const FeedbackPunctuation&, OperatorContext&) {}
  virtual bool has_pending_work() const { return false; }
  virtual void pending_work(OperatorContext&) {}
  virtual void input_closed(std::size_t /*input*/, OperatorContext&) {}
  virtual void finish(OperatorContext&) {}

  virtual std::size_t guard_count() const { return 0; }
  virtual const std::vector<StreamItem>* collected() const { return nullptr; }

 private:
  std::vector<SchemaPtr> inputs_;
};

namespace detail {
class Engine;
}
class OperatorDriver;

class OperatorContext {
 public:
  // Appends to the current page of a port; the page leaves when full or when
  // the item is a punctuation.
  void emit(std::size_t port, StreamItem item) {
    auto& page = (*partial_)[port];
    if (item.is_tuple())
      ++counters_->tuples_out;
    else
      ++counters_->puncts_out;
    page.push(std::move(item));
    if (page.ready()) {
      ready_.emplace_back(port, std::move(page));
      page = Page(page_capacity_);
    }
  }

  void emit(StreamItem item) { emit(0, std::move(item)); }

  // Asynchronous; the sender never waits for delivery.
  void send_feedback(std::size_t input, FeedbackPunctuation f) {
    ++counters_->feedback_sent;
    feedback_.emplace_back(input, std::move(f));
  }

  void charge(std::uint64_t units) {
    counters_->work_units += units;
    charged_ += units;
  }

  OperatorCounters& counters() { return *counters_; }
  std::size_t page_capacity() const { return page_capacity_; }
  CostMode cost_mode() const { return cost_mode_; }
  std::uint64_t seed() const { return seed_; }
  // Virtual time under the deterministic scheduler, milliseconds since start otherwise.
  std::uint64_t now() const { return now_; }

 private:
  friend class detail::Engine;
  friend class OperatorDriver;

  std::vector<Page>* partial_ = nullptr;
  OperatorCounters* counters_ = nullptr;
  std::size_t page_capacity_ = 0;
  CostMode cost_mode_ = CostMode::virtual_units;
  std::uint64_t seed_ = 0;
  std::uint64_t now_ = 0;
  std::uint64_t charged_ = 0;
  std::vector<std::pair<std::size_t, Page>> ready_;
  std::vector<std::pair<std::size_t, FeedbackPunctuation>> feedback_;
};

struct PortRef {
  std::string node;
  std::size_t port = 0;
};

using OperatorFactory = std::function<std::unique_ptr<Operator>()>;

struct NodeSpec {
  std::string id;
  OperatorFactory make;
  std::vector<PortRef> inputs;
};

// A plan is a recipe: every run instantiates fresh operators.
class Plan {
 public:
  Plan& add(std::string id, OperatorFactory make, std::vector<PortRef> inputs = {}) {
    for (const auto& n : nodes_)
      if (n.id == id) throw PlanError("duplicate node id '" + id + "'");
    nodes_.push_back({std::move(id), std::move(make), std::move(inputs)});
    return *this;
  }

  const std::vector<NodeSpec>& nodes() const { return nodes_; }

 private:
  std::vector<NodeSpec> nodes_;
};

struct RunOptions {
  SchedulerKind scheduler = SchedulerKind::deterministic;
  std::uint64_t seed = 0;
  std::size_t page_capacity = 100;
  std::size_t queue_pages = 8;
  // Virtual work units granted to each operator per scheduling round; 0 means page_capacity.
  std::uint64_t round_quantum = 0;
  CostMode cost_mode = CostMode::virtual_units;
  // Called for every page placed on a data queue. `final_flush` marks the
  // partial page released by end-of-stream.
  std::function<void(const std::string& producer, const Page&, bool final_flush)> page_observer;
};

struct RunReport {
  std::vector<std::string> node_ids;
  std::vector<std::string> kinds;
  std::vector<OperatorCounters> counters;
  std::map<std::string, std::vector<StreamItem>> outputs;
  std::vector<std::shared_ptr<Operator>> operators;
  std::uint64_t virtual_time = 0;

  const OperatorCounters& counters_of(std::string_view id) const {
    for (std::size_t i = 0; i < node_ids.size(); ++i)
      if (node_ids[i] == id) return counters[i];
    throw std::out_of_range("no node '" + std::string(id) + "' in report");
  }

  template <typename Op>
  Op& op(std::string_view id) const {
    for (std::size_t i = 0; i < node_ids.size(); ++i)
      if (node_ids[i] == id) return dynamic_cast<Op&>(*operators[i]);
    throw std::out_of_range("no node '" + std::string(id) + "' in report");
  }

  std::uint64_t total_work() const {
    std::uint64_t w = 0;
    for (const auto& c : counters) w += c.work_units;
    return w;
  }

  friend bool operator==(const RunReport& a, const RunReport& b) {
    return a.node_ids == b.node_ids && a.counters == b.counters && a.outputs == b.outputs;
  }
};

namespace detail {

struct Edge {
  std::size_t producer = 0, producer_port = 0;
  std::size_t consumer = 0, consumer_port = 0;
  std::deque<Page> pages;
  std::deque<ControlMessage> upstream;
  std::deque<ControlMessage> downstream;
  bool producer_done = false;
};

struct NodeState {
  std::string id;
  std::shared_ptr<Operator> op;
  std::vector<std::size_t> in_edges;
  std::vector<std::optional<std::size_t>> out_edges;
  std::vector<Page> partial;
  std::vector<bool> input_closed;
  OperatorCounters counters;
  bool started = false;
  bool finished = false;
  std::uint64_t clock = 0;
  std::size_t next_input = 0;
};

struct WorkUnit {
  enum class Kind { start, feedback, page, end_of_stream, pending, finish };
  WorkUnit(Kind k, std::size_t p = 0) : kind(k), port(p) {}
  Kind kind;
  std::size_t port = 0;
  std::optional<Page> page;
  std::optional<FeedbackPunctuation> feedback;
};

class Engine {
 public:
  Engine(const Plan& plan, const RunOptions& opts) : opts_(opts) {
    if (opts_.page_capacity == 0 || opts_.queue_pages == 0) throw PlanError("page and queue capacity must be positive");
    if (opts_.round_quantum == 0) opts_.round_quantum = opts_.page_capacity;

    std::map<std::string, std::size_t> index;
    for (const auto& spec : plan.nodes()) {
      NodeState n;
      n.id = spec.id;
      n.op = spec.make();
      if (!n.op) throw PlanError("node '" + spec.id + "' has no operator");
      if (spec.inputs.size() != n.op->input_schemas().size())
        throw PlanError("node '" + spec.id + "' (" + std::string(n.op->kind()) + ") expects " +
                        std::to_string(n.op->input_schemas().size()) + " inputs, plan gives " +
                        std::to_string(spec.inputs.size()));
      n.out_edges.resize(n.op->num_outputs());
      for (std::size_t p = 0; p < n.op->num_outputs(); ++p) n.partial.emplace_back(opts_.page_capacity);
      n.input_closed.assign(spec.inputs.size(), false);
      index[spec.id] = nodes_.size();
      nodes_.push_back(std::move(n));
    }

    for (std::size_t c = 0; c < plan.nodes().size(); ++c) {
      const auto& spec = plan.nodes()[c];
      for (std::size_t port = 0; port < spec.inputs.size(); ++port) {
        const auto& ref = spec.inputs[port];
        auto it = index.find(ref.node);
        std::string edge_name = ref.node + "." + std::to_string(ref.port) + " -> " + spec.id + "." + std::to_string(port);
        if (it == index.end()) throw PlanError("edge " + edge_name + ": unknown producer");
        auto& producer = nodes_[it->second];
        if (ref.port >= producer.out_edges.size()) throw PlanError("edge " + edge_name + ": no such output port");
        if (producer.out_edges[ref.port]) throw PlanError("edge " + edge_name + ": output port already consumed");
        auto out_schema = producer.op->output_schema(ref.port);
        const auto& in_schema = nodes_[c].op->input_schemas()[port];
        if (!same_schema(out_schema, in_schema))
          throw PlanError("edge " + edge_name + ": schema mismatch (" + out_schema->name() + " vs " + in_schema->name() + ")");
        Edge e;
        e.producer = it->second;
        e.producer_port = ref.port;
        e.consumer = c;
        e.consumer_port = port;
        producer.out_edges[ref.port] = edges_.size();
        nodes_[c].in_edges.push_back(edges_.size());
        edges_.push_back(std::move(e));
      }
    }
    topo_order();
  }

  RunReport run() {
    if (opts_.scheduler == SchedulerKind::deterministic)
      run_deterministic();
    else
      run_concurrent();
    RunReport report;
    report.virtual_time = now_;
    for (auto& n : nodes_) {
      report.node_ids.push_back(n.id);
      report.kinds.emplace_back(n.op->kind());
      report.counters.push_back(n.counters);
      if (auto* items = n.op->collected()) report.outputs[n.id] = *items;
      report.operators.push_back(n.op);
    }
    return report;
  }

 private:
  void topo_order() {
    std::vector<std::size_t> indegree(nodes_.size(), 0);
    for (const auto& e : edges_) ++indegree[e.consumer];
    std::deque<std::size_t> ready;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (indegree[i] == 0) ready.push_back(i);
    while (!ready.empty()) {
      auto n = ready.front();
      ready.pop_front();
      order_.push_back(n);
      for (const auto& oe : nodes_[n].out_edges) {
        if (!oe) continue;
        if (--indegree[edges_[*oe].consumer] == 0) ready.push_back(edges_[*oe].consumer);
      }
    }
    if (order_.size() != nodes_.size()) throw PlanError("plan graph has a cycle");
  }

  bool outputs_have_room(const NodeState& n) const {
    for (const auto& oe : n.out_edges)
      if (oe && edges_[*oe].pages.size() >= opts_.queue_pages) return false;
    return true;
  }

  // Picks the next unit of work for a node; caller holds the engine lock.
  std::optional<WorkUnit> select(NodeState& n) {
    using K = WorkUnit::Kind;
    if (n.finished) return std::nullopt;
    if (!n.started) return WorkUnit{K::start};

    for (std::size_t port = 0; port < n.out_edges.size(); ++port) {
      if (!n.out_edges[port]) continue;
      auto& q = edges_[*n.out_edges[port]].upstream;
      if (!q.empty()) {
        WorkUnit u{K::feedback, port};
        u.feedback = std::move(q.front().feedback);
        q.pop_front();
        return u;
      }
    }

    const auto inputs = n.in_edges.size();
    bool room = outputs_have_room(n);
    for (std::size_t k = 0; k < inputs; ++k) {
      auto port = (n.next_input + k) % inputs;
      auto& e = edges_[n.in_edges[port]];
      if (!e.pages.empty()) {
        if (!room) break;
        WorkUnit u{K::page, port};
        u.page = std::move(e.pages.front());
        e.pages.pop_front();
        n.next_input = (port + 1) % inputs;
        return u;
      }
      // End-of-stream is ordered behind the pages it terminates.
      if (!n.input_closed[port] && !e.downstream.empty()) {
        e.downstream.pop_front();
        n.input_closed[port] = true;
        return WorkUnit{K::end_of_stream, port};
      }
    }

    if (n.op->has_pending_work()) {
      if (room) return WorkUnit{K::pending};
      return std::nullopt;
    }
    if (std::all_of(n.input_closed.begin(), n.input_closed.end(), [](bool b) { return b; }))
      return WorkUnit{K::finish};
    return std::nullopt;
  }

  // Runs a unit; touches only node-private state, so the lock is not needed.
  OperatorContext execute(NodeState& n, WorkUnit& u, std::uint64_t now) {
    using K = WorkUnit::Kind;
    OperatorContext ctx;
    ctx.partial_ = &n.partial;
    ctx.counters_ = &n.counters;
    ctx.page_capacity_ = opts_.page_capacity;
    ctx.cost_mode_ = opts_.cost_mode;
    ctx.seed_ = opts_.seed;
    ctx.now_ = now;
    auto& op = *n.op;
    switch (u.kind) {
      case K::start:
        op.start(ctx);
        break;
      case K::feedback:
        if (op.feedback_aware()) {
          ++n.counters.feedback_received;
          op.on_feedback(u.port, *u.feedback, ctx);
        }
        break;
      case K::page:
        for (auto& item : u.page->take_items()) {
          if (item.is_tuple())
            ++n.counters.tuples_in;
          else
            ++n.counters.puncts_in;
          op.process(u.port, std::move(item), ctx);
        }
        break;
      case K::end_of_stream:
        op.input_closed(u.port, ctx);
        break;
      case K::pending:
        op.pending_work(ctx);
        break;
      case K::finish:
        op.finish(ctx);
        break;
    }
    return ctx;
  }

  // Publishes a unit's effects; caller holds the engine lock.
  void commit(NodeState& n, const WorkUnit& u, OperatorContext& ctx) {
    if (u.kind == WorkUnit::Kind::start) n.started = true;
    for (auto& [port, page] : ctx.ready_) deliver(n, port, std::move(page), false);
    for (auto& [input, f] : ctx.feedback_) {
      if (input >= n.in_edges.size()) continue;
      auto& e = edges_[n.in_edges[input]];
      if (!e.producer_done) e.upstream.push_back(ControlMessage::make_feedback(std::move(f)));
    }
    if (u.kind == WorkUnit::Kind::finish) {
      n.finished = true;
      for (std::size_t port = 0; port < n.partial.size(); ++port) {
        if (!n.partial[port].empty()) {
          deliver(n, port, std::move(n.partial[port]), true);
          n.partial[port] = Page(opts_.page_capacity);
        }
        if (n.out_edges[port]) {
          auto& e = edges_[*n.out_edges[port]];
          e.downstream.push_back(ControlMessage::end_of_stream());
          e.producer_done = true;
          e.upstream.clear();
        }
      }
    }
  }

  void deliver(NodeState& n, std::size_t port, Page page, bool final_flush) {
    if (!n.out_edges[port]) return;
    if (opts_.page_observer) opts_.page_observer(n.id, page, final_flush);
    edges_[*n.out_edges[port]].pages.push_back(std::move(page));
  }

  bool all_finished() const {
    return std::all_of(nodes_.begin(), nodes_.end(), [](const NodeState& n) { return n.finished; });
  }

  std::string blocked_summary() const {
    std::string s;
    for (const auto& n : nodes_)
      if (!n.finished) s += (s.empty() ? "" : ", ") + n.id;
    return s;
  }

  // Round-robin in topological order, one unit per turn. Each round grants
  // every operator `round_quantum` units of virtual time; an operator whose
  // clock has used up the round waits for the next one.
  void run_deterministic() {
    const auto quantum = opts_.round_quantum;
    std::uint64_t round_end = quantum;
    while (!all_finished()) {
      bool progressed = false;
      bool throttled = false;
      std::uint64_t min_clock = UINT64_MAX;
      bool any = true;
      while (any) {
        any = false;
        for (auto idx : order_) {
          auto& n = nodes_[idx];
          if (n.finished) continue;
          auto start = std::max(n.clock, round_end - quantum);
          if (start >= round_end) {
            if (select_peek(n)) {
              throttled = true;
              min_clock = std::min(min_clock, n.clock);
            }
            continue;
          }
          auto unit = select(n);
          if (!unit) continue;
          auto ctx = execute(n, *unit, start);
          n.clock = start + ctx.charged_;
          now_ = std::max(now_, n.clock);
          commit(n, *unit, ctx);
          any = progressed = true;
        }
      }
      if (!progressed && !throttled && !all_finished())
        throw RunError("deadlock: no operator can make progress (blocked: " + blocked_summary() + ")");
      round_end += quantum;
      if (!progressed && throttled && min_clock >= round_end) round_end = (min_clock / quantum + 1) * quantum;
    }
  }

  // Whether select() would find work, without consuming it.
  bool select_peek(const NodeState& n) const {
    if (n.finished) return false;
    if (!n.started) return true;
    for (const auto& oe : n.out_edges)
      if (oe && !edges_[*oe].upstream.empty()) return true;
    bool room = outputs_have_room(n);
    for (std::size_t port = 0; port < n.in_edges.size(); ++port) {
      const auto& e = edges_[n.in_edges[port]];
      if (!e.pages.empty() && room) return true;
      if (e.pages.empty() && !n.input_closed[port] && !e.downstream.empty()) return true;
    }
    if (n.op->has_pending_work()) return room;
    return std::all_of(n.input_closed.begin(), n.input_closed.end(), [](bool b) { return b; });
  }

  // One thread per operator; all queues sit under one lock and operators run
  // their units outside it.
  void run_concurrent() {
    std::mutex mu;
    std::condition_variable cv;
    std::size_t waiting = 0;
    std::size_t active = nodes_.size();
    std::optional<std::string> failure;
    const auto t0 = std::chrono::steady_clock::now();

    auto worker = [&](std::size_t idx) {
      auto& n = nodes_[idx];
      std::unique_lock lock(mu);
      while (true) {
        if (failure) break;
        auto unit = select(n);
        if (!unit) {
          if (n.finished) break;
          if (waiting + 1 == active) {
            bool any = false;
            for (const auto& m : nodes_) any = any || select_peek(m);
            if (!any) {
              failure = "deadlock: no operator can make progress (blocked: " + blocked_summary() + ")";
              cv.notify_all();
              break;
            }
          }
          ++waiting;
          cv.wait(lock);
          --waiting;
          continue;
        }
        lock.unlock();
        auto now = static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count());
        std::optional<OperatorContext> ctx;
        try {
          ctx = execute(n, *unit, now);
        } catch (const std::exception& e) {
          lock.lock();
          failure = "node " + n.id + ": " + e.what();
          cv.notify_all();
          break;
        }
        lock.lock();
        commit(n, *unit, *ctx);
        cv.notify_all();
        if (n.finished) break;
      }
      --active;
      cv.notify_all();
    };

    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < nodes_.size(); ++i) threads.emplace_back(worker, i);
    for (auto& t : threads) t.join();
    if (failure) throw RunError(*failure);
  }

  RunOptions opts_;
  std::vector<NodeState> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> order_;
  std::uint64_t now_ = 0;
};

}  // namespace detail

// Calls one operator's callbacks directly, without queues or a scheduler.
// Every emitted item is visible immediately; meant for tests and tooling.
class OperatorDriver {
 public:
  explicit OperatorDriver(std::unique_ptr<Operator> op, CostMode mode = CostMode::virtual_units)
      : op_(std::move(op)), outputs_(op_->num_outputs()), mode_(mode) {}

  template <typename T>
  T& op() { return dynamic_cast<T&>(*op_); }

  OperatorDriver& start() { return call([&](OperatorContext& c) { op_->start(c); }); }

  OperatorDriver& push(std::size_t input, StreamItem item) {
    if (item.is_tuple())
      ++counters_.tuples_in;
    else
      ++counters_.puncts_in;
    return call([&](OperatorContext& c) { op_->process(input, std::move(item), c); });
  }

  OperatorDriver& push(StreamItem item) { return push(0, std::move(item)); }

  OperatorDriver& feedback(std::size_t port, const FeedbackPunctuation& f) {
    if (op_->feedback_aware()) ++counters_.feedback_received;
    return call([&](OperatorContext& c) {
      if (op_->feedback_aware()) op_->on_feedback(port, f, c);
    });
  }

  OperatorDriver& feedback(const FeedbackPunctuation& f) { return feedback(0, f); }

  // Runs pending work until the operator reports none.
  OperatorDriver& drain() {
    while (op_->has_pending_work()) call([&](OperatorContext& c) { op_->pending_work(c); });
    return *this;
  }

  OperatorDriver& close(std::size_t input) { return call([&](OperatorContext& c) { op_->input_closed(input, c); }); }
  OperatorDriver& finish() { return call([&](OperatorContext& c) { op_->finish(c); }); }

  const std::vector<StreamItem>& output(std::size_t port = 0) const { return outputs_.at(port); }
  const std::vector<std::pair<std::size_t, FeedbackPunctuation>>& sent() const { return sent_; }
  const OperatorCounters& counters() const { return counters_; }
  void clear() {
    for (auto& o : outputs_) o.clear();
    sent_.clear();
  }

 private:
  template <typename Fn>
  OperatorDriver& call(Fn&& fn) {
    // Capacity 1: every emitted item forms a ready page at once.
    std::vector<Page> partial(op_->num_outputs(), Page(1));
    OperatorContext ctx;
    ctx.partial_ = &partial;
    ctx.counters_ = &counters_;
    ctx.page_capacity_ = 1;
    ctx.cost_mode_ = mode_;
    ctx.now_ = clock_;
    fn(ctx);
    clock_ += ctx.charged_;
    for (auto& [port, page] : ctx.ready_)
      for (auto& item : page.take_items()) outputs_[port].push_back(std::move(item));
    for (auto& f : ctx.feedback_) sent_.push_back(std::move(f));
    return *this;
  }

  std::unique_ptr<Operator> op_;
  std::vector<std::vector<StreamItem>> outputs_;
  std::vector<std::pair<std::size_t, FeedbackPunctuation>> sent_;
  OperatorCounters counters_;
  CostMode mode_;
  std::uint64_t clock_ = 0;
};

// Validates the plan (edge schemas, port wiring, acyclicity) and runs it to completion.
inline RunReport run_plan(const Plan& plan, const RunOptions& opts = {}) {
  detail::Engine engine(plan, opts);
  return engine.run();
}

}  // namespace fbp
