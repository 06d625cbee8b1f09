#pragma once

#include <atomic>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "smtlog/datalog/ast.hpp"

namespace smtlog::dl {

/// Tuple store for one relation: set semantics, insertion-ordered rows with
/// global timestamps, and hash indexes built on demand per bound-column
/// pattern. Index buckets keep row ids ascending, which is also timestamp
/// order, so timestamp cutoffs are binary searches.
class Relation {
public:
    std::optional<uint32_t> insert(Tuple t, uint64_t ts) {
        std::lock_guard<std::mutex> lock(mu_);
        auto [it, fresh] = dedup_.try_emplace(t, static_cast<uint32_t>(rows_.size()));
        if (!fresh) return std::nullopt;
        uint32_t id = it->second;
        rows_.push_back(std::move(t));
        ts_.push_back(ts);
        for (auto& [cols, index] : indexes_) {
            Tuple key = project(rows_[id], cols);
            index[std::move(key)].push_back(id);
        }
        return id;
    }

    bool contains(const Tuple& t) const {
        std::lock_guard<std::mutex> lock(mu_);
        return dedup_.count(t) > 0;
    }

    size_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return rows_.size();
    }

    Tuple row(uint32_t id) const {
        std::lock_guard<std::mutex> lock(mu_);
        return rows_[id];
    }

    uint64_t row_ts(uint32_t id) const {
        std::lock_guard<std::mutex> lock(mu_);
        return ts_[id];
    }

    /// Ids of rows matching `key` on columns `cols` (all rows when `cols` is
    /// empty), restricted to timestamps <= bound (inclusive) or < bound.
    /// A bound of UINT64_MAX with inclusive=true means no restriction.
    std::vector<uint32_t> collect(const std::vector<uint32_t>& cols, const Tuple& key,
                                  uint64_t ts_bound, bool inclusive) const {
        std::lock_guard<std::mutex> lock(mu_);
        const std::vector<uint32_t>* bucket = nullptr;
        std::vector<uint32_t> all;
        if (cols.empty()) {
            all.resize(rows_.size());
            for (uint32_t i = 0; i < rows_.size(); ++i) all[i] = i;
            bucket = &all;
        } else {
            auto& index = ensure_index(cols);
            auto it = index.find(key);
            if (it == index.end()) return {};
            bucket = &it->second;
        }
        // Row ids ascend with timestamps; cut at the bound.
        auto past = std::partition_point(bucket->begin(), bucket->end(),
                                         [&](uint32_t id) {
                                             return inclusive ? ts_[id] <= ts_bound
                                                              : ts_[id] < ts_bound;
                                         });
        return std::vector<uint32_t>(bucket->begin(), past);
    }

    /// Rows in structural order (deterministic across runs).
    std::vector<Tuple> sorted_rows() const {
        std::vector<Tuple> out;
        {
            std::lock_guard<std::mutex> lock(mu_);
            out.assign(rows_.begin(), rows_.end());
        }
        std::sort(out.begin(), out.end(), tuple_less);
        return out;
    }

private:
    using Index = std::unordered_map<Tuple, std::vector<uint32_t>, TupleHash>;

    static Tuple project(const Tuple& row, const std::vector<uint32_t>& cols) {
        Tuple key;
        key.reserve(cols.size());
        for (uint32_t c : cols) key.push_back(row[c]);
        return key;
    }

    Index& ensure_index(const std::vector<uint32_t>& cols) const {
        auto it = indexes_.find(cols);
        if (it != indexes_.end()) return it->second;
        Index& index = indexes_[cols];
        for (uint32_t id = 0; id < rows_.size(); ++id)
            index[project(rows_[id], cols)].push_back(id);
        return index;
    }

    mutable std::mutex mu_;
    std::deque<Tuple> rows_;
    std::deque<uint64_t> ts_;
    std::unordered_map<Tuple, uint32_t, TupleHash> dedup_;
    mutable std::map<std::vector<uint32_t>, Index> indexes_;
};

class Database {
public:
    explicit Database(const Program& prog) {
        rels_.reserve(prog.relations.size());
        for (size_t i = 0; i < prog.relations.size(); ++i)
            rels_.push_back(std::make_unique<Relation>());
    }

    Database(const Database&) = delete;
    Database& operator=(const Database&) = delete;

    Relation& rel(uint32_t id) { return *rels_[id]; }
    const Relation& rel(uint32_t id) const { return *rels_[id]; }
    size_t relation_count() const { return rels_.size(); }

    uint64_t next_ts() { return ts_.fetch_add(1); }

    /// Inserts into a relation, stamping a fresh timestamp; returns the new
    /// row id or nullopt for duplicates.
    std::optional<uint32_t> insert(uint32_t rel_id, Tuple t) {
        auto row = rels_[rel_id]->insert(std::move(t), next_ts());
        if (row) tuples_.fetch_add(1);
        return row;
    }

    uint64_t total_tuples() const { return tuples_.load(); }

    /// Set equality, relation by relation.
    bool equal_sets(const Database& other) const {
        if (rels_.size() != other.rels_.size()) return false;
        for (size_t i = 0; i < rels_.size(); ++i)
            if (rels_[i]->sorted_rows() != other.rels_[i]->sorted_rows())
                return false;
        return true;
    }

private:
    std::vector<std::unique_ptr<Relation>> rels_;
    std::atomic<uint64_t> ts_{0};
    std::atomic<uint64_t> tuples_{0};
};

} // namespace smtlog::dl
