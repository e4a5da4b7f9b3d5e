#pragma once

#include "citadel/group.hpp"

namespace citadel {

// Pedersen commitment key: two generators with unknown discrete-log
// relation.
struct CommitKey {
    GroupElement g;
    GroupElement g_prime;
};

inline const CommitKey& default_commit_key() {
    static const CommitKey ck{generator(), generator_prime()};
    return ck;
}

// c = m*G + r*G'
inline GroupElement commit(const CommitKey& ck, const Scalar& m, const Scalar& r) {
    if (ck.g == generator() && ck.g_prime == generator_prime()) {
        return mul_gen(m) + mul_gen_prime(r);
    }
    return ck.g.mul(m) + ck.g_prime.mul(r);
}

inline bool open(const CommitKey& ck, const Scalar& m, const Scalar& r,
                 const GroupElement& c) {
    return commit(ck, m, r) == c;
}

}  // namespace citadel
