#pragma once

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "smtlog/datalog/ast.hpp"
#include "smtlog/datalog/database.hpp"
#include "smtlog/solver.hpp"

namespace smtlog::dl {

enum class IssueOrder { Dfs, Bfs };

inline const char* order_name(IssueOrder o) {
    return o == IssueOrder::Dfs ? "dfs" : "bfs";
}

enum class UnknownPolicy { TreatFalse, TreatTrue, Error };

struct EvalConfig {
    IssueOrder order = IssueOrder::Dfs;
    std::optional<uint32_t> max_path_len; // is_sat lists longer than this fail
    uint32_t worker_count = 1;            // 1 = deterministic sequential
    UnknownPolicy unknown_policy = UnknownPolicy::TreatFalse;
    uint64_t tuple_budget = 10'000'000;
};

/// Verdict cache keyed by the order-insensitive canonical conjunct set
/// (sorted, deduplicated intern ids). Hits never reach the solver.
class QueryCache {
public:
    using Key = std::vector<uint64_t>;

    static Key key_for(std::span<const Conjunct> conjuncts) {
        Key k;
        k.reserve(conjuncts.size());
        for (const Conjunct& c : conjuncts) k.push_back(c.id());
        std::sort(k.begin(), k.end());
        k.erase(std::unique(k.begin(), k.end()), k.end());
        return k;
    }

    std::optional<SatResult> lookup(const Key& k) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = map_.find(k);
        if (it == map_.end()) return std::nullopt;
        return it->second;
    }

    /// Insert-if-absent; concurrently computed duplicates must agree.
    void store(const Key& k, const SatResult& r) {
        std::lock_guard<std::mutex> lock(mu_);
        auto [it, fresh] = map_.try_emplace(k, r);
        if (!fresh && it->second != r)
            throw EvalError("query cache verdict disagreement (soundness bug)");
    }

    size_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return map_.size();
    }

private:
    struct KeyHash {
        size_t operator()(const Key& k) const {
            size_t h = k.size();
            for (uint64_t v : k)
                h ^= std::hash<uint64_t>{}(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
            return h;
        }
    };

    mutable std::mutex mu_;
    std::unordered_map<Key, SatResult, KeyHash> map_;
};

struct EvalStats {
    Metrics solver;          // summed over the session pool on return
    uint64_t cache_hits = 0;
    uint64_t cache_misses = 0;
    uint64_t queries = 0;    // is_sat invocations, cache hits included
    uint64_t tuples = 0;     // rows in the final database
};

/// Called for every is_sat query with its verdict and cache-hit flag.
using QueryObserver =
    std::function<void(const std::vector<Conjunct>&, const SatResult&, bool)>;

struct EvalResult {
    std::unique_ptr<Database> db;
    EvalStats stats;
};

/// Resolves one is_sat call: consult the cache (order-insensitively), else
/// dispatch the ordered conjunct list to the session, then map the verdict
/// through the Unknown policy.
inline bool builtin_is_sat(const std::vector<Conjunct>& conjuncts, Session& session,
                           QueryCache* cache, UnknownPolicy policy, EvalStats& stats,
                           const QueryObserver& observer, std::mutex* stats_mu) {
    SatResult r = SatResult::unknown("unqueried");
    bool hit = false;
    QueryCache::Key key;
    if (cache) {
        key = QueryCache::key_for(conjuncts);
        if (auto cached = cache->lookup(key)) {
            r = *cached;
            hit = true;
        }
    }
    if (!hit) {
        r = session.check(conjuncts);
        if (cache) cache->store(key, r);
    }
    {
        std::optional<std::lock_guard<std::mutex>> lock;
        if (stats_mu) lock.emplace(*stats_mu);
        stats.queries += 1;
        (hit ? stats.cache_hits : stats.cache_misses) += 1;
    }
    if (observer) observer(conjuncts, r, hit);
    switch (r.verdict) {
    case SatResult::Verdict::Sat: return true;
    case SatResult::Verdict::Unsat: return false;
    case SatResult::Verdict::Unknown: break;
    }
    switch (policy) {
    case UnknownPolicy::TreatFalse: return false;
    case UnknownPolicy::TreatTrue: return true;
    case UnknownPolicy::Error: break;
    }
    throw EvalError("solver returned unknown (" + r.unknown_reason.value_or("?") +
                    ") and the policy is 'error'");
}

/// Pure reordering of a pending work batch: bfs keeps queue (FIFO) order,
/// dfs yields stack (LIFO) order. The engine's worklist applies the same
/// discipline dynamically.
template <typename T>
std::vector<T> issue_order(std::vector<T> pending, IssueOrder order) {
    if (order == IssueOrder::Dfs) std::reverse(pending.begin(), pending.end());
    return pending;
}

namespace detail {

/// Worklist-driven semi-naive evaluation. Every derivation joins at least
/// one tuple newer than everything else it joins (the pinned tuple), so no
/// instantiation is computed twice; set-semantics inserts make re-derivations
/// no-ops. The worklist discipline (LIFO/FIFO) realizes the dfs/bfs
/// issuance-order policies without changing the fixpoint.
class Engine {
public:
    Engine(const Program& prog, std::span<Session* const> sessions,
           const EvalConfig& config, QueryCache* cache, QueryObserver observer)
        : prog_(prog), sessions_(sessions), config_(config), cache_(cache),
          observer_(std::move(observer)), db_(std::make_unique<Database>(prog)) {
        if (config_.worker_count < 1)
            throw EvalError("worker_count must be >= 1");
        if (sessions_.size() < config_.worker_count)
            throw EvalError("session pool smaller than worker_count");
        pins_.resize(prog_.relations.size());
        for (uint32_t r = 0; r < prog_.rules.size(); ++r) {
            const Rule& rule = prog_.rules[r];
            bool has_rel = false;
            for (uint32_t p = 0; p < rule.body.size(); ++p) {
                if (rule.body[p].kind != Literal::Kind::Rel) continue;
                has_rel = true;
                pins_[rule.body[p].atom.rel].push_back({r, p});
            }
            if (!has_rel) seed_rules_.push_back(r);
        }
    }

    EvalResult run() {
        for (const auto& [rel, tuple] : prog_.facts)
            insert(rel, tuple);
        for (uint32_t r : seed_rules_) {
            Binding env(prog_.rules[r].var_count);
            eval_from(prog_.rules[r], env, 0, kNoPin, 0, worker_session(0));
        }
        if (config_.worker_count == 1) {
            while (!queue_.empty()) {
                WorkItem item = pop_item();
                process(item, worker_session(0));
            }
        } else {
            run_parallel();
        }
        EvalResult result;
        result.stats = stats_;
        result.stats.tuples = db_->total_tuples();
        for (Session* s : sessions_) result.stats.solver += s->metrics();
        result.db = std::move(db_);
        return result;
    }

private:
    static constexpr uint32_t kNoPin = UINT32_MAX;

    struct WorkItem {
        uint32_t rel;
        uint32_t row;
    };
    struct Pin {
        uint32_t rule;
        uint32_t pos;
    };
    struct Binding {
        explicit Binding(uint32_t n) : values(n), bound(n, false) {}
        std::vector<Value> values;
        std::vector<bool> bound;
    };

    Session& worker_session(uint32_t worker) { return *sessions_[worker]; }

    WorkItem pop_item() {
        WorkItem item = config_.order == IssueOrder::Dfs ? queue_.back() : queue_.front();
        if (config_.order == IssueOrder::Dfs)
            queue_.pop_back();
        else
            queue_.pop_front();
        return item;
    }

    void insert(uint32_t rel, Tuple tuple) {
        auto row = db_->insert(rel, std::move(tuple));
        if (!row) return;
        if (db_->total_tuples() > config_.tuple_budget)
            throw BudgetExceeded("tuple budget of " +
                                 std::to_string(config_.tuple_budget) + " exceeded");
        std::lock_guard<std::mutex> lock(queue_mu_);
        queue_.push_back(WorkItem{rel, *row});
        queue_cv_.notify_one();
    }

    void process(const WorkItem& item, Session& session) {
        const Tuple pinned = db_->rel(item.rel).row(item.row);
        uint64_t pin_ts = db_->rel(item.rel).row_ts(item.row);
        for (const Pin& pin : pins_[item.rel]) {
            const Rule& rule = prog_.rules[pin.rule];
            Binding env(rule.var_count);
            if (!match_atom(rule.body[pin.pos].atom, pinned, env)) continue;
            eval_from(rule, env, 0, pin.pos, pin_ts, session);
        }
    }

    /// Left-to-right evaluation of body literals from position `idx`, with
    /// the literal at `pin_pos` already matched against the pinned tuple.
    /// Positions left of the pin join rows up to and including the pin
    /// timestamp; positions right of it join strictly older rows, so each
    /// instantiation fires exactly once (when its newest tuple is pinned).
    void eval_from(const Rule& rule, Binding& env, uint32_t idx, uint32_t pin_pos,
                   uint64_t pin_ts, Session& session) {
        if (idx == rule.body.size()) {
            Tuple head;
            head.reserve(rule.head.args.size());
            for (const Expr& a : rule.head.args) head.push_back(eval_expr(a, env));
            insert(rule.head.rel, std::move(head));
            return;
        }
        if (idx == pin_pos) { // already matched into env
            eval_from(rule, env, idx + 1, pin_pos, pin_ts, session);
            return;
        }
        const Literal& lit = rule.body[idx];
        switch (lit.kind) {
        case Literal::Kind::Rel: {
            std::vector<uint32_t> cols;
            Tuple key;
            for (uint32_t i = 0; i < lit.atom.args.size(); ++i) {
                if (expr_ground(lit.atom.args[i], env)) {
                    cols.push_back(i);
                    key.push_back(eval_expr(lit.atom.args[i], env));
                }
            }
            bool inclusive = pin_pos != kNoPin && idx < pin_pos;
            uint64_t bound = pin_pos == kNoPin ? UINT64_MAX : pin_ts;
            std::vector<uint32_t> ids =
                db_->rel(lit.atom.rel).collect(cols, key, bound,
                                               pin_pos == kNoPin ? true : inclusive);
            for (uint32_t id : ids) {
                Tuple row = db_->rel(lit.atom.rel).row(id);
                Binding saved = env;
                if (match_atom(lit.atom, row, env))
                    eval_from(rule, env, idx + 1, pin_pos, pin_ts, session);
                env = std::move(saved);
            }
            return;
        }
        case Literal::Kind::IsSat: {
            Value list = eval_expr(lit.a, env);
            if (config_.max_path_len && list.list_length() > *config_.max_path_len)
                return;
            std::vector<Conjunct> query = list_to_query(list);
            if (query.empty()) {
                // Empty conjunction is trivially satisfiable; nothing to ask.
                eval_from(rule, env, idx + 1, pin_pos, pin_ts, session);
                return;
            }
            bool sat = builtin_is_sat(query, session, cache_, config_.unknown_policy,
                                      stats_, observer_,
                                      config_.worker_count > 1 ? &stats_mu_ : nullptr);
            if (sat) eval_from(rule, env, idx + 1, pin_pos, pin_ts, session);
            return;
        }
        case Literal::Kind::Bind: {
            env.values[lit.bind_var] = eval_expr(lit.a, env);
            env.bound[lit.bind_var] = true;
            eval_from(rule, env, idx + 1, pin_pos, pin_ts, session);
            env.bound[lit.bind_var] = false;
            return;
        }
        case Literal::Kind::Neq: {
            if (eval_expr(lit.a, env) != eval_expr(lit.b, env))
                eval_from(rule, env, idx + 1, pin_pos, pin_ts, session);
            return;
        }
        }
    }

    static bool expr_ground(const Expr& e, const Binding& env) {
        switch (e.kind) {
        case Expr::Kind::Lit:
        case Expr::Kind::Nil: return true;
        case Expr::Kind::Var: return env.bound[e.var];
        case Expr::Kind::Cons:
            return expr_ground(e.kids[0], env) && expr_ground(e.kids[1], env);
        }
        return false;
    }

    static Value eval_expr(const Expr& e, const Binding& env) {
        switch (e.kind) {
        case Expr::Kind::Lit: return e.lit;
        case Expr::Kind::Nil: return Value::nil();
        case Expr::Kind::Var: return env.values[e.var];
        case Expr::Kind::Cons: {
            Value head = eval_expr(e.kids[0], env);
            Value tail = eval_expr(e.kids[1], env);
            return Value::cons(head.as_smt(), tail);
        }
        }
        return Value::nil();
    }

    static bool match_expr(const Expr& e, const Value& v, Binding& env) {
        switch (e.kind) {
        case Expr::Kind::Lit:
            return e.lit == v;
        case Expr::Kind::Var:
            if (env.bound[e.var]) return env.values[e.var] == v;
            env.values[e.var] = v;
            env.bound[e.var] = true;
            return true;
        case Expr::Kind::Nil:
            return v.kind() == Value::Kind::List && v.as_list() == nullptr;
        case Expr::Kind::Cons: {
            if (v.kind() != Value::Kind::List || v.as_list() == nullptr) return false;
            const ListNode* n = v.as_list();
            return match_expr(e.kids[0], Value::of_smt(n->head), env) &&
                   match_expr(e.kids[1], Value::of_list(n->tail), env);
        }
        }
        return false;
    }

    static bool match_atom(const Atom& atom, const Tuple& row, Binding& env) {
        for (size_t i = 0; i < atom.args.size(); ++i)
            if (!match_expr(atom.args[i], row[i], env)) return false;
        return true;
    }

    void run_parallel() {
        std::vector<std::thread> workers;
        std::exception_ptr first_error;
        std::mutex error_mu;
        active_ = 0;
        done_ = false;
        for (uint32_t w = 0; w < config_.worker_count; ++w) {
            workers.emplace_back([this, w, &first_error, &error_mu] {
                try {
                    worker_loop(w);
                } catch (...) {
                    {
                        std::lock_guard<std::mutex> lock(error_mu);
                        if (!first_error) first_error = std::current_exception();
                    }
                    std::lock_guard<std::mutex> lock(queue_mu_);
                    done_ = true;
                    queue_cv_.notify_all();
                }
            });
        }
        for (auto& t : workers) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    void worker_loop(uint32_t worker) {
        while (true) {
            WorkItem item{};
            {
                std::unique_lock<std::mutex> lock(queue_mu_);
                queue_cv_.wait(lock, [this] {
                    return done_ || !queue_.empty() || active_ == 0;
                });
                if (done_) return;
                if (queue_.empty()) {
                    if (active_ == 0) { // global quiescence
                        done_ = true;
                        queue_cv_.notify_all();
                        return;
                    }
                    continue;
                }
                item = config_.order == IssueOrder::Dfs ? queue_.back() : queue_.front();
                if (config_.order == IssueOrder::Dfs)
                    queue_.pop_back();
                else
                    queue_.pop_front();
                ++active_;
            }
            process(item, worker_session(worker));
            {
                std::lock_guard<std::mutex> lock(queue_mu_);
                --active_;
                queue_cv_.notify_all();
            }
        }
    }

    const Program& prog_;
    std::span<Session* const> sessions_;
    EvalConfig config_;
    QueryCache* cache_;
    QueryObserver observer_;
    std::unique_ptr<Database> db_;
    std::vector<std::vector<Pin>> pins_;
    std::vector<uint32_t> seed_rules_;
    std::deque<WorkItem> queue_;
    std::mutex queue_mu_;
    std::condition_variable queue_cv_;
    uint32_t active_ = 0;
    bool done_ = false;
    EvalStats stats_;
    std::mutex stats_mu_;
};

} // namespace detail

/// Least fixpoint of the program's rules over its facts. is_sat(Fs) holds
/// iff the strategy verdict on the conjunct list Fs is Sat (Unknown per the
/// configured policy). Deterministic for worker_count = 1; with more workers
/// each owns one session from the pool and only Metrics may vary.
inline EvalResult evaluate(const Program& prog, std::span<Session* const> sessions,
                           const EvalConfig& config, QueryCache* cache = nullptr,
                           QueryObserver observer = {}) {
    detail::Engine engine(prog, sessions, config, cache, std::move(observer));
    return engine.run();
}

} // namespace smtlog::dl
