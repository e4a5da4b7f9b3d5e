#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "citadel/bytes.hpp"
#include "citadel/hash.hpp"

namespace citadel {

// Membership proof: one leaf, its position, and for each level the k-1
// sibling hashes plus the index of the path child among its siblings.
struct MerkleProof {
    Scalar leaf;
    uint64_t pos = 0;
    std::vector<std::vector<Scalar>> siblings;  // depth x (arity-1), leaf level first
    std::vector<uint32_t> child_indices;        // depth entries, each in [0, arity)

    void serialize(ByteWriter& w) const {
        w.raw(leaf.to_bytes());
        w.u64(pos);
        w.u32(static_cast<uint32_t>(siblings.size()));
        w.u32(siblings.empty() ? 0 : static_cast<uint32_t>(siblings[0].size()));
        for (const auto& level : siblings) {
            for (const auto& s : level) w.raw(s.to_bytes());
        }
        for (uint32_t c : child_indices) w.u8(static_cast<uint8_t>(c));
    }

    static MerkleProof deserialize(ByteReader& rd) {
        MerkleProof p;
        auto leaf = Scalar::from_bytes(rd.take(32));
        if (!leaf) throw std::runtime_error("non-canonical proof leaf");
        p.leaf = *leaf;
        p.pos = rd.u64();
        uint32_t depth = rd.u32(), width = rd.u32();
        if (depth > 40 || width > 15) throw std::runtime_error("proof shape out of range");
        p.siblings.resize(depth);
        for (auto& level : p.siblings) {
            level.reserve(width);
            for (uint32_t j = 0; j < width; j++) {
                auto s = Scalar::from_bytes(rd.take(32));
                if (!s) throw std::runtime_error("non-canonical proof sibling");
                level.push_back(*s);
            }
        }
        p.child_indices.resize(depth);
        for (auto& c : p.child_indices) c = rd.u8();
        return p;
    }
};

inline Scalar merkle_empty_leaf() {
    static const Scalar v = hash_sponge_tagged("EMPTY", {});
    return v;
}

inline Scalar merkle_tombstone() {
    static const Scalar v = hash_sponge_tagged("REVOKED", {});
    return v;
}

// Recompute the path and compare against the given root. Malformed shapes
// and child indices inconsistent with pos reject rather than throw.
inline bool merkle_verify(const Scalar& root, const MerkleProof& proof) {
    size_t depth = proof.siblings.size();
    if (depth == 0 || depth > 40 || proof.child_indices.size() != depth) return false;
    size_t arity = proof.siblings[0].size() + 1;
    if (arity < 2 || arity > 16) return false;

    Scalar cur = proof.leaf;
    uint64_t idx = proof.pos;
    for (size_t level = 0; level < depth; level++) {
        if (proof.siblings[level].size() != arity - 1) return false;
        uint32_t child = proof.child_indices[level];
        if (child != idx % arity) return false;
        idx /= arity;
        std::vector<Fq> children;
        children.reserve(arity);
        size_t sib = 0;
        for (size_t j = 0; j < arity; j++) {
            children.push_back(j == child ? cur.to_fq()
                                          : proof.siblings[level][sib++].to_fq());
        }
        cur = hash_sponge_tagged("", children);
    }
    return idx == 0 && cur == root;
}

// Append-only k-ary Merkle tree over scalars. Nodes are stored sparsely per
// level; untouched subtrees fall back to precomputed empty-subtree hashes,
// so capacity can be k^depth while memory stays proportional to appends.
class MerkleTree {
public:
    explicit MerkleTree(uint32_t arity = 4, uint32_t depth = 17)
        : arity_(arity), depth_(depth) {
        if (arity < 2 || arity > 16) throw std::invalid_argument("arity out of range");
        if (depth < 1 || depth > 40) throw std::invalid_argument("depth out of range");
        double cap = 1;
        for (uint32_t i = 0; i < depth; i++) cap *= arity;
        capacity_ = cap > 1e18 ? uint64_t(1) << 62 : static_cast<uint64_t>(cap);

        empty_.resize(depth + 1);
        empty_[0] = merkle_empty_leaf();
        for (uint32_t l = 1; l <= depth; l++) {
            std::vector<Fq> children(arity, empty_[l - 1].to_fq());
            empty_[l] = hash_sponge_tagged("", children);
        }
        nodes_.resize(depth + 1);
        push_root(empty_[depth]);
    }

    uint32_t arity() const { return arity_; }
    uint32_t depth() const { return depth_; }
    uint64_t size() const { return n_leaves_; }
    uint64_t capacity() const { return capacity_; }
    bool full() const { return n_leaves_ >= capacity_; }

    Scalar root() const { return node(depth_, 0); }
    const std::vector<Scalar>& root_history() const { return root_history_; }
    bool known_root(const Scalar& r) const { return root_set_.count(r) > 0; }

    Scalar leaf(uint64_t pos) const {
        check_pos(pos);
        return node(0, pos);
    }

    std::pair<uint64_t, Scalar> append(const Scalar& leaf) {
        if (full()) throw std::runtime_error("merkle tree full");
        uint64_t pos = n_leaves_++;
        set_leaf_and_rehash(pos, leaf);
        Scalar r = root();
        push_root(r);
        return {pos, r};
    }

    MerkleProof prove(uint64_t pos) const {
        check_pos(pos);
        MerkleProof proof;
        proof.leaf = node(0, pos);
        proof.pos = pos;
        proof.siblings.resize(depth_);
        proof.child_indices.resize(depth_);
        uint64_t idx = pos;
        for (uint32_t level = 0; level < depth_; level++) {
            uint32_t child = idx % arity_;
            uint64_t base = idx - child;
            proof.child_indices[level] = child;
            proof.siblings[level].reserve(arity_ - 1);
            for (uint32_t j = 0; j < arity_; j++) {
                if (j != child) proof.siblings[level].push_back(node(level, base + j));
            }
            idx /= arity_;
        }
        return proof;
    }

    // Revocation support: overwrite the leaf with the tombstone constant so
    // old proofs for it stop verifying against the new root.
    Scalar invalidate(uint64_t pos) {
        check_pos(pos);
        if (node(0, pos) == merkle_tombstone()) return root();
        set_leaf_and_rehash(pos, merkle_tombstone());
        Scalar r = root();
        push_root(r);
        return r;
    }

    bool invalidated(uint64_t pos) const {
        check_pos(pos);
        return node(0, pos) == merkle_tombstone();
    }

    void serialize(ByteWriter& w) const {
        w.raw({reinterpret_cast<const uint8_t*>("CMT1"), 4});
        w.u8(1);
        w.u8(static_cast<uint8_t>(arity_));
        w.u8(static_cast<uint8_t>(depth_));
        w.u64(n_leaves_);
        for (uint64_t i = 0; i < n_leaves_; i++) {
            auto b = node(0, i).to_bytes();
            w.raw(b);
        }
        w.u32(static_cast<uint32_t>(root_history_.size()));
        for (const auto& r : root_history_) w.raw(r.to_bytes());
    }

    static MerkleTree deserialize(ByteReader& rd) {
        auto magic = rd.take(4);
        if (Bytes(magic.begin(), magic.end()) != Bytes{'C', 'M', 'T', '1'})
            throw std::runtime_error("bad merkle file magic");
        if (rd.u8() != 1) throw std::runtime_error("unsupported merkle file version");
        uint32_t arity = rd.u8(), depth = rd.u8();
        MerkleTree t(arity, depth);
        uint64_t n = rd.u64();
        if (n > t.capacity_) throw std::runtime_error("leaf count exceeds capacity");
        t.root_history_.clear();
        t.root_set_.clear();
        for (uint64_t i = 0; i < n; i++) {
            auto s = Scalar::from_bytes(rd.take(32));
            if (!s) throw std::runtime_error("non-canonical leaf");
            t.n_leaves_ = i + 1;
            t.set_leaf_and_rehash(i, *s);
        }
        uint32_t nroots = rd.u32();
        for (uint32_t i = 0; i < nroots; i++) {
            auto s = Scalar::from_bytes(rd.take(32));
            if (!s) throw std::runtime_error("non-canonical root");
            t.push_root(*s);
        }
        if (!t.root_set_.count(t.root())) throw std::runtime_error("root history mismatch");
        return t;
    }

private:
    void check_pos(uint64_t pos) const {
        if (pos >= n_leaves_) throw std::out_of_range("merkle position vacant");
    }

    Scalar node(uint32_t level, uint64_t idx) const {
        auto it = nodes_[level].find(idx);
        return it == nodes_[level].end() ? empty_[level] : it->second;
    }

    void set_leaf_and_rehash(uint64_t pos, const Scalar& leaf) {
        nodes_[0][pos] = leaf;
        uint64_t idx = pos;
        for (uint32_t level = 0; level < depth_; level++) {
            uint64_t parent = idx / arity_;
            std::vector<Fq> children;
            children.reserve(arity_);
            for (uint32_t j = 0; j < arity_; j++) {
                children.push_back(node(level, parent * arity_ + j).to_fq());
            }
            nodes_[level + 1][parent] = hash_sponge_tagged("", children);
            idx = parent;
        }
    }

    void push_root(const Scalar& r) {
        root_history_.push_back(r);
        root_set_.insert(r);
    }

    uint32_t arity_, depth_;
    uint64_t capacity_ = 0;
    uint64_t n_leaves_ = 0;
    std::vector<std::unordered_map<uint64_t, Scalar>> nodes_;
    std::vector<Scalar> empty_;
    std::vector<Scalar> root_history_;
    std::set<Scalar, ScalarLess> root_set_;
};

}  // namespace citadel
