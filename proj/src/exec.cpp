#include "pushq/exec.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "pushq/csv.hpp"

namespace pushq {

// ---------------------------------------------------------------------------
// Plan
// ---------------------------------------------------------------------------

NodeId Plan::add(std::string label, std::shared_ptr<Operator> op, Schema out_schema) {
    PlanNode node;
    node.id = nodes_.size();
    node.label = std::move(label);
    node.op = std::move(op);
    node.out_schema = std::make_shared<const Schema>(std::move(out_schema));
    nodes_.push_back(std::move(node));
    return nodes_.back().id;
}

void Plan::connect(NodeId from, NodeId to) {
    if (from >= nodes_.size() || to >= nodes_.size())
        throw PlanError("edge references unknown node");
    edges_.push_back({from, to, fan_in(to)});
}

void Plan::mark_fused(NodeId id) { nodes_.at(id).fused = true; }

std::size_t Plan::fan_in(NodeId id) const {
    std::size_t n = 0;
    for (const auto& e : edges_)
        if (e.to == id) ++n;
    return n;
}

NodeId Plan::sink() const {
    std::optional<NodeId> sink;
    for (const auto& node : nodes_) {
        bool has_out = false;
        for (const auto& e : edges_)
            if (e.from == node.id) has_out = true;
        if (!has_out) {
            if (sink) throw PlanError("plan has more than one sink");
            sink = node.id;
        }
    }
    if (!sink) throw PlanError("plan has no sink");
    return *sink;
}

std::vector<NodeId> Plan::topological_order() const {
    std::vector<std::size_t> indegree(nodes_.size(), 0);
    for (const auto& e : edges_) ++indegree[e.to];
    std::vector<NodeId> ready, order;
    for (const auto& node : nodes_)
        if (indegree[node.id] == 0) ready.push_back(node.id);
    while (!ready.empty()) {
        NodeId id = ready.front();
        ready.erase(ready.begin());
        order.push_back(id);
        for (const auto& e : edges_) {
            if (e.from != id) continue;
            if (--indegree[e.to] == 0) ready.push_back(e.to);
        }
    }
    if (order.size() != nodes_.size()) throw PlanError("plan contains a cycle");
    return order;
}

void Plan::validate() const {
    if (nodes_.empty()) throw PlanError("empty plan");
    topological_order();
    sink();
}

std::string Plan::to_json() const {
    nlohmann::json j;
    j["nodes"] = nlohmann::json::array();
    j["edges"] = nlohmann::json::array();
    for (const auto& node : nodes_)
        j["nodes"].push_back({{"id", node.id}, {"label", node.label}, {"fused", node.fused}});
    for (const auto& e : edges_)
        j["edges"].push_back({{"from", e.from}, {"to", e.to}, {"input", e.input_index}});
    return j.dump();
}

// ---------------------------------------------------------------------------
// Fusion
// ---------------------------------------------------------------------------

namespace {

// Runs a linear chain of operators inside one worker: emissions of stage i
// become on_batch calls of stage i+1 directly, with no queue hop.
class FusedOperator final : public Operator {
  public:
    FusedOperator(std::vector<std::shared_ptr<Operator>> stages,
                  std::vector<SchemaPtr> stage_schemas)
        : stages_(std::move(stages)), schemas_(std::move(stage_schemas)) {}

    void produce(ExecContext& ctx, Emitter& out) override {
        Emitter e = stage_emitter(ctx, 0, out);
        stages_.front()->produce(ctx, e);
        e.flush();
    }
    void on_batch(ExecContext& ctx, std::size_t input, const TupleBatch& batch,
                  Emitter& out) override {
        Emitter e = stage_emitter(ctx, 0, out);
        stages_.front()->on_batch(ctx, input, batch, e);
        e.flush();
    }
    void on_input_done(ExecContext& ctx, std::size_t input, Emitter& out) override {
        Emitter e = stage_emitter(ctx, 0, out);
        stages_.front()->on_input_done(ctx, input, e);
        e.flush();
    }
    void finish(ExecContext& ctx, Emitter& out) override {
        // Stage i's final emissions must reach stage i+1 before that stage
        // learns its input is complete.
        for (std::size_t i = 0; i < stages_.size(); ++i) {
            Emitter e = stage_emitter(ctx, i, out);
            if (i > 0) stages_[i]->on_input_done(ctx, 0, e);
            stages_[i]->finish(ctx, e);
            e.flush();
        }
    }

  private:
    Emitter stage_emitter(ExecContext& ctx, std::size_t i, Emitter& out) {
        if (i + 1 == stages_.size())
            return Emitter(schemas_[i], ctx.batch_rows,
                           [&out](BatchPtr b) { out.emit_batch(std::move(b)); });
        return Emitter(schemas_[i], ctx.batch_rows, [this, &ctx, i, &out](BatchPtr b) {
            Emitter next = stage_emitter(ctx, i + 1, out);
            stages_[i + 1]->on_batch(ctx, 0, *b, next);
            next.flush();
        });
    }

    std::vector<std::shared_ptr<Operator>> stages_;
    std::vector<SchemaPtr> schemas_;
};

}  // namespace

Plan fuse(const Plan& plan, std::span<const NodeId> path) {
    if (path.size() < 2) throw NotAPath("fusion needs at least two nodes");
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        bool connected = false;
        for (const auto& e : plan.edges())
            if (e.from == path[i] && e.to == path[i + 1]) connected = true;
        if (!connected) throw NotAPath("nodes are not a connected path");
    }
    for (std::size_t i = 0; i < path.size(); ++i) {
        std::size_t outs = 0, ins = 0;
        for (const auto& e : plan.edges()) {
            if (e.from == path[i]) ++outs;
            if (e.to == path[i]) ++ins;
        }
        if (i > 0 && ins != 1) throw NotAPath("interior node has multiple inputs");
        if (i + 1 < path.size() && outs != 1) throw NotAPath("interior node has multiple outputs");
    }

    std::vector<std::shared_ptr<Operator>> stages;
    std::vector<SchemaPtr> schemas;
    std::string label = "fused[";
    for (std::size_t i = 0; i < path.size(); ++i) {
        const PlanNode& node = plan.node(path[i]);
        stages.push_back(node.op);
        schemas.push_back(node.out_schema);
        if (i) label += "+";
        label += node.label;
    }
    label += "]";

    Plan out;
    std::vector<NodeId> remap(plan.nodes().size(), SIZE_MAX);
    NodeId fused_id = SIZE_MAX;
    for (const auto& node : plan.nodes()) {
        bool in_path = std::find(path.begin(), path.end(), node.id) != path.end();
        if (in_path) {
            if (node.id == path.front()) {
                auto op = std::make_shared<FusedOperator>(stages, schemas);
                fused_id = out.add(label, op, *plan.node(path.back()).out_schema);
                out.mark_fused(fused_id);
            }
            continue;
        }
        remap[node.id] = out.add(node.label, node.op, *node.out_schema);
    }
    for (const auto& node : plan.nodes())
        if (std::find(path.begin(), path.end(), node.id) != path.end()) remap[node.id] = fused_id;

    for (const auto& e : plan.edges()) {
        bool from_in = std::find(path.begin(), path.end(), e.from) != path.end();
        bool to_in = std::find(path.begin(), path.end(), e.to) != path.end();
        if (from_in && to_in) continue;
        out.connect(remap[e.from], remap[e.to]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

namespace {

struct Message {
    std::size_t input;
    BatchPtr batch;  // null = end of stream on this input
};

// Bounded FIFO channel; one mailbox per consumer node carries edge-tagged
// messages, which keeps per-edge FIFO order with a single wait point.
class Mailbox {
  public:
    explicit Mailbox(std::size_t capacity) : capacity_(capacity) {}

    void push(Message m, const std::atomic<bool>& cancelled) {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_push_.wait(lock, [&] {
            return queue_.size() < capacity_ || cancelled.load(std::memory_order_relaxed);
        });
        if (cancelled.load(std::memory_order_relaxed)) throw OperationCancelled();
        queue_.push_back(std::move(m));
        cv_pop_.notify_one();
    }

    Message pop(const std::atomic<bool>& cancelled) {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_pop_.wait(lock, [&] {
            return !queue_.empty() || cancelled.load(std::memory_order_relaxed);
        });
        if (cancelled.load(std::memory_order_relaxed)) throw OperationCancelled();
        Message m = std::move(queue_.front());
        queue_.pop_front();
        cv_push_.notify_one();
        return m;
    }

    void wake_all() {
        std::lock_guard<std::mutex> lock(mutex_);
        cv_push_.notify_all();
        cv_pop_.notify_all();
    }

  private:
    std::size_t capacity_;
    std::mutex mutex_;
    std::condition_variable cv_push_, cv_pop_;
    std::deque<Message> queue_;
};

}  // namespace

RunResult run_plan(const Plan& plan, ObjectStore& store, const PriceCard& card,
                   const RunOptions& options, UsageMeter* shared_meter) {
    plan.validate();
    const NodeId sink_id = plan.sink();

    UsageMeter local_meter;
    UsageMeter* meter = shared_meter ? shared_meter : &local_meter;
    std::atomic<bool> cancelled{false};

    ExecContext ctx;
    ctx.store = &store;
    ctx.meter = meter;
    ctx.cancelled = &cancelled;
    ctx.scan_mode = options.scan_mode;
    ctx.batch_rows = options.batch_rows;

    RunResult result;
    result.schema = *plan.node(sink_id).out_schema;
    std::mutex result_mutex;
    auto collect = [&](const BatchPtr& batch) {
        std::lock_guard<std::mutex> lock(result_mutex);
        for (const auto& row : batch->rows) result.rows.push_back(row);
    };

    auto started = std::chrono::steady_clock::now();

    if (options.mode == ExecMode::Serial) {
        // Reference path: one node at a time in topological order with
        // materialized edges. Input k drains fully before input k+1, matching
        // the build/probe contract of multi-input operators.
        std::vector<std::vector<std::vector<BatchPtr>>> inbox(plan.nodes().size());
        for (const auto& node : plan.nodes()) inbox[node.id].resize(plan.fan_in(node.id));
        try {
            for (NodeId id : plan.topological_order()) {
                const PlanNode& node = plan.node(id);
                std::vector<std::pair<NodeId, std::size_t>> outs;
                for (const auto& e : plan.edges())
                    if (e.from == id) outs.emplace_back(e.to, e.input_index);
                Emitter emitter(node.out_schema, options.batch_rows, [&](BatchPtr batch) {
                    if (id == sink_id) {
                        collect(batch);
                        return;
                    }
                    for (auto& [to, input] : outs) inbox[to][input].push_back(batch);
                });
                if (inbox[id].empty()) {
                    node.op->produce(ctx, emitter);
                } else {
                    for (std::size_t input = 0; input < inbox[id].size(); ++input) {
                        for (auto& batch : inbox[id][input])
                            node.op->on_batch(ctx, input, *batch, emitter);
                        inbox[id][input].clear();
                        node.op->on_input_done(ctx, input, emitter);
                    }
                }
                node.op->finish(ctx, emitter);
                emitter.flush();
            }
        } catch (const std::exception& e) {
            throw ExecError(e.what(), meter->snapshot());
        }
    } else {
        std::vector<std::unique_ptr<Mailbox>> mailboxes(plan.nodes().size());
        struct Wiring {
            std::vector<std::pair<Mailbox*, std::size_t>> consumers;
            std::size_t fan_in = 0;
        };
        std::vector<Wiring> wiring(plan.nodes().size());
        for (const auto& node : plan.nodes()) {
            wiring[node.id].fan_in = plan.fan_in(node.id);
            if (wiring[node.id].fan_in > 0)
                mailboxes[node.id] = std::make_unique<Mailbox>(options.queue_capacity);
        }
        for (const auto& e : plan.edges())
            wiring[e.from].consumers.emplace_back(mailboxes[e.to].get(), e.input_index);

        std::mutex error_mutex;
        std::exception_ptr first_error;
        auto fail = [&](std::exception_ptr e) {
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = e;
            }
            cancelled.store(true, std::memory_order_relaxed);
            for (auto& mb : mailboxes)
                if (mb) mb->wake_all();
        };

        auto worker = [&](const PlanNode& node) {
            try {
                Emitter emitter(node.out_schema, options.batch_rows, [&](BatchPtr batch) {
                    if (node.id == sink_id) {
                        collect(batch);
                        return;
                    }
                    for (auto& [mb, input] : wiring[node.id].consumers)
                        mb->push({input, batch}, cancelled);
                });
                if (wiring[node.id].fan_in == 0) {
                    node.op->produce(ctx, emitter);
                } else {
                    std::size_t open_inputs = wiring[node.id].fan_in;
                    while (open_inputs > 0) {
                        Message m = mailboxes[node.id]->pop(cancelled);
                        if (m.batch)
                            node.op->on_batch(ctx, m.input, *m.batch, emitter);
                        else {
                            node.op->on_input_done(ctx, m.input, emitter);
                            --open_inputs;
                        }
                    }
                }
                node.op->finish(ctx, emitter);
                emitter.flush();
                for (auto& [mb, input] : wiring[node.id].consumers)
                    mb->push({input, nullptr}, cancelled);
            } catch (const OperationCancelled&) {
                // a sibling failed; exit promptly
            } catch (...) {
                fail(std::current_exception());
            }
        };

        {
            std::vector<std::jthread> workers;
            workers.reserve(plan.nodes().size());
            for (const auto& node : plan.nodes()) workers.emplace_back(worker, std::cref(node));
        }

        if (first_error) {
            try {
                std::rethrow_exception(first_error);
            } catch (const std::exception& e) {
                throw ExecError(e.what(), meter->snapshot());
            }
        }
    }

    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started);
    result.report = price(meter->snapshot(), elapsed.count(), card);
    return result;
}

// ---------------------------------------------------------------------------
// Stock operators
// ---------------------------------------------------------------------------

void ScanSelectOp::produce(ExecContext& ctx, Emitter& out) {
    ctx.check_cancelled();
    SelectResult res = ctx.store->select(object_, sql_, meter_ ? *meter_ : *ctx.meter,
                                         ctx.scan_mode);
    std::vector<std::string_view> fields;
    CsvRows rows(res.payload);
    std::string_view raw;
    while (rows.next(raw)) {
        ctx.check_cancelled();
        split_csv_row(raw, ',', fields);
        Row row;
        row.reserve(fields.size());
        for (auto f : fields) {
            if (!f.empty() && f.front() == '"')
                row.push_back(Value::text(unquote_csv_field(f)));
            else
                row.push_back(Value::text(std::string(f)));
        }
        out.emit_row(std::move(row));
    }
}

void FilterOp::on_batch(ExecContext& ctx, std::size_t, const TupleBatch& batch, Emitter& out) {
    for (const auto& row : batch.rows) {
        ctx.check_cancelled();
        Value v = eval_expr(pred_, row);
        if (v.kind() == Value::Kind::Bool && v.as_bool()) out.emit_row(row);
    }
}

void ProjectOp::on_batch(ExecContext& ctx, std::size_t, const TupleBatch& batch, Emitter& out) {
    for (const auto& row : batch.rows) {
        ctx.check_cancelled();
        Row projected;
        projected.reserve(exprs_.size());
        for (const auto& e : exprs_) projected.push_back(eval_expr(e, row));
        out.emit_row(std::move(projected));
    }
}

LocalAggregateOp::LocalAggregateOp(SelectQuery bound_agg_query)
    : query_(std::move(bound_agg_query)) {}

void LocalAggregateOp::on_batch(ExecContext& ctx, std::size_t, const TupleBatch& batch, Emitter&) {
    if (!agg_) agg_.emplace(query_);
    for (const auto& row : batch.rows) {
        ctx.check_cancelled();
        agg_->feed(row);
    }
}

void LocalAggregateOp::finish(ExecContext&, Emitter& out) {
    if (!agg_) agg_.emplace(query_);
    out.emit_row(agg_->finish());
}

void HashJoinOp::on_batch(ExecContext& ctx, std::size_t input, const TupleBatch& batch,
                          Emitter& out) {
    ctx.check_cancelled();
    if (input == 0) {
        for (const auto& row : batch.rows) build_rows_.push_back(row);
        return;
    }
    if (!build_done_) {
        // Probe data raced ahead of the build side; hold it until the build
        // completes.
        held_probe_.push_back(std::make_shared<TupleBatch>(batch));
        return;
    }
    probe_rows(batch, out);
}

void HashJoinOp::on_input_done(ExecContext& ctx, std::size_t input, Emitter& out) {
    ctx.check_cancelled();
    if (input != 0) return;
    for (std::size_t i = 0; i < build_rows_.size(); ++i)
        table_.emplace(build_rows_[i][build_key_].to_string(), i);
    build_done_ = true;
    for (const auto& held : held_probe_) probe_rows(*held, out);
    held_probe_.clear();
}

void HashJoinOp::probe_rows(const TupleBatch& batch, Emitter& out) {
    for (const auto& row : batch.rows) {
        auto [lo, hi] = table_.equal_range(row[probe_key_].to_string());
        for (auto it = lo; it != hi; ++it) {
            Row joined = build_rows_[it->second];
            joined.insert(joined.end(), row.begin(), row.end());
            out.emit_row(std::move(joined));
        }
    }
}

}  // namespace pushq
