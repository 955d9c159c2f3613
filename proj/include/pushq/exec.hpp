#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pushq/cost_model.hpp"
#include "pushq/sql_ast.hpp"
#include "pushq/sql_eval.hpp"
#include "pushq/store.hpp"
#include "pushq/value.hpp"

namespace pushq {

using Schema = std::vector<std::string>;
using SchemaPtr = std::shared_ptr<const Schema>;
using Row = std::vector<Value>;

// Immutable once emitted; producers hand batches to consumers by shared
// pointer, never by mutation.
struct TupleBatch {
    SchemaPtr schema;
    std::vector<Row> rows;
};
using BatchPtr = std::shared_ptr<const TupleBatch>;

enum class ExecMode : uint8_t { Serial, Parallel };

struct ExecContext {
    ObjectStore* store = nullptr;
    UsageMeter* meter = nullptr;
    std::atomic<bool>* cancelled = nullptr;
    ScanMode scan_mode = ScanMode::Serial;
    std::size_t batch_rows = 8192;

    void check_cancelled() const {
        if (cancelled && cancelled->load(std::memory_order_relaxed)) throw OperationCancelled();
    }
};

// Buffers rows into fixed-capacity batches and forwards them to a sink.
class Emitter {
  public:
    Emitter(SchemaPtr schema, std::size_t capacity, std::function<void(BatchPtr)> sink)
        : schema_(std::move(schema)), capacity_(capacity), sink_(std::move(sink)) {}

    void emit_row(Row row) {
        pending_.push_back(std::move(row));
        if (pending_.size() >= capacity_) flush();
    }
    void emit_batch(BatchPtr batch) {
        flush();
        if (batch && !batch->rows.empty()) sink_(std::move(batch));
    }
    void flush() {
        if (pending_.empty()) return;
        auto batch = std::make_shared<TupleBatch>();
        batch->schema = schema_;
        batch->rows = std::move(pending_);
        pending_.clear();
        sink_(std::move(batch));
    }
    const SchemaPtr& schema() const { return schema_; }

  private:
    SchemaPtr schema_;
    std::size_t capacity_;
    std::function<void(BatchPtr)> sink_;
    std::vector<Row> pending_;
};

// Event-driven operator. Sources implement produce(); interior operators
// react to batches per input edge. `finish` runs once after every input has
// delivered its end-of-stream.
class Operator {
  public:
    virtual ~Operator() = default;
    virtual void produce(ExecContext&, Emitter&) {}
    virtual void on_batch(ExecContext&, std::size_t input, const TupleBatch&, Emitter&) = 0;
    virtual void on_input_done(ExecContext&, std::size_t input, Emitter&) {
        (void)input;
    }
    virtual void finish(ExecContext&, Emitter&) {}
};

using NodeId = std::size_t;

struct PlanNode {
    NodeId id;
    std::string label;
    std::shared_ptr<Operator> op;
    SchemaPtr out_schema;
    bool fused = false;
};

struct PlanEdge {
    NodeId from;
    NodeId to;
    std::size_t input_index;  // position among `to`'s inputs
};

// Operator DAG. Exactly one sink; every non-source node has >= 1 input.
// Input indices at a node follow connect() order (e.g. hash join: input 0 is
// the build side, input 1 the probe side).
class Plan {
  public:
    NodeId add(std::string label, std::shared_ptr<Operator> op, Schema out_schema);
    void connect(NodeId from, NodeId to);

    const std::vector<PlanNode>& nodes() const { return nodes_; }
    const std::vector<PlanEdge>& edges() const { return edges_; }
    const PlanNode& node(NodeId id) const { return nodes_.at(id); }

    NodeId sink() const;                       // validates single-sink
    void validate() const;                     // throws PlanError
    std::vector<NodeId> topological_order() const;
    std::size_t fan_in(NodeId id) const;
    void mark_fused(NodeId id);
    std::string to_json() const;

  private:
    std::vector<PlanNode> nodes_;
    std::vector<PlanEdge> edges_;
};

// Collapses a path of nodes into one serially-fused node executing the whole
// chain in a single worker with no queue hops. Interior nodes of the path
// must be single-input/single-output. Results are unchanged.
Plan fuse(const Plan& plan, std::span<const NodeId> path);

struct RunOptions {
    ExecMode mode = ExecMode::Parallel;
    ScanMode scan_mode = ScanMode::Serial;  // kernel mode inside one request
    std::size_t batch_rows = 8192;
    std::size_t queue_capacity = 16;  // batches per edge queue
};

struct RunResult {
    std::vector<Row> rows;
    Schema schema;
    CostReport report;
};

// Thrown when an operator fails; carries the counters accumulated before the
// failure so partial work remains observable.
struct ExecError : Error {
    ExecError(const std::string& what, MeterSnapshot partial)
        : Error(what), partial_meter(partial) {}
    MeterSnapshot partial_meter;
};

// Executes the plan to completion. In parallel mode every node runs as its
// own worker connected by bounded FIFO queues; in serial mode nodes run one
// at a time in topological order. An operator error cancels all workers.
RunResult run_plan(const Plan& plan, ObjectStore& store, const PriceCard& card = {},
                   const RunOptions& options = {}, UsageMeter* shared_meter = nullptr);

// ---- stock operators ----

// Source: issues one Select against an object and emits the parsed rows.
// An optional meter override redirects this scan's counters (e.g. to account
// a join's build and probe sides separately); the caller then owns merging
// side meters into the query total.
class ScanSelectOp final : public Operator {
  public:
    ScanSelectOp(std::string object, std::string sql, UsageMeter* meter_override = nullptr)
        : object_(std::move(object)), sql_(std::move(sql)), meter_(meter_override) {}
    void produce(ExecContext& ctx, Emitter& out) override;
    void on_batch(ExecContext&, std::size_t, const TupleBatch&, Emitter&) override {}

  private:
    std::string object_;
    std::string sql_;
    UsageMeter* meter_;
};

// Row filter on a bound predicate (ordinals resolved against input schema).
class FilterOp final : public Operator {
  public:
    explicit FilterOp(Expr bound_predicate) : pred_(std::move(bound_predicate)) {}
    void on_batch(ExecContext&, std::size_t, const TupleBatch& batch, Emitter& out) override;

  private:
    Expr pred_;
};

// Projection over bound expressions.
class ProjectOp final : public Operator {
  public:
    explicit ProjectOp(std::vector<Expr> bound_exprs) : exprs_(std::move(bound_exprs)) {}
    void on_batch(ExecContext&, std::size_t, const TupleBatch& batch, Emitter& out) override;

  private:
    std::vector<Expr> exprs_;
};

// Pass-through merge of any number of inputs.
class UnionOp final : public Operator {
  public:
    void on_batch(ExecContext&, std::size_t, const TupleBatch& batch, Emitter& out) override {
        out.emit_batch(std::make_shared<TupleBatch>(batch));
    }
};

// Arbitrary stateless row transform; the strategy modules use this for steps
// that have no dedicated operator.
class MapOp final : public Operator {
  public:
    using Fn = std::function<void(const TupleBatch&, Emitter&)>;
    explicit MapOp(Fn fn) : fn_(std::move(fn)) {}
    void on_batch(ExecContext&, std::size_t, const TupleBatch& batch, Emitter& out) override {
        fn_(batch, out);
    }

  private:
    Fn fn_;
};

// Compute-side aggregation over all input rows; emits one row at finish.
class LocalAggregateOp final : public Operator {
  public:
    explicit LocalAggregateOp(SelectQuery bound_agg_query);
    void on_batch(ExecContext&, std::size_t, const TupleBatch& batch, Emitter&) override;
    void finish(ExecContext&, Emitter& out) override;

  private:
    SelectQuery query_;
    std::optional<AggregateEvaluator> agg_;
};

// In-memory hash join; input 0 builds, input 1 probes. Probe batches arriving
// before the build completes are buffered. Output = build row ++ probe row.
class HashJoinOp final : public Operator {
  public:
    HashJoinOp(std::size_t build_key_col, std::size_t probe_key_col)
        : build_key_(build_key_col), probe_key_(probe_key_col) {}
    void on_batch(ExecContext&, std::size_t input, const TupleBatch& batch, Emitter& out) override;
    void on_input_done(ExecContext&, std::size_t input, Emitter& out) override;

  private:
    void probe_rows(const TupleBatch& batch, Emitter& out);

    std::size_t build_key_;
    std::size_t probe_key_;
    bool build_done_ = false;
    std::vector<Row> build_rows_;
    std::vector<BatchPtr> held_probe_;
    std::unordered_multimap<std::string, std::size_t> table_;
};

}  // namespace pushq
