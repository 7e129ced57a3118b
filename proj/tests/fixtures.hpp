#pragma once

#include "avrsafe/mdp.hpp"

namespace fixtures {

using avrsafe::ConstraintMask;
using avrsafe::DiscreteMdp;
using avrsafe::MdpBuilder;

inline DiscreteMdp single_state(bool safe) {
    return MdpBuilder(1, 1)
        .set_constraint(ConstraintMask::all(1, safe))
        .set_row(0, 0, {{0, 1.0}})
        .build();
}

// s0 in C moves to the safe absorbing s1 w.p. 0.7 and to the unsafe absorbing
// s2 w.p. 0.3. With `sure_loss`, s0 gets a second action straight into s2.
inline DiscreteMdp three_state_chain(bool sure_loss = false) {
    const std::size_t actions = sure_loss ? 2 : 1;
    MdpBuilder b(3, actions);
    b.set_constraint(ConstraintMask({true, true, false}));
    b.set_row(0, 0, {{1, 0.7}, {2, 0.3}});
    if (sure_loss) b.set_row(0, 1, {{2, 1.0}});
    b.set_absorbing(1);
    b.set_absorbing(2);
    return b.build();
}

// 0 <-> 1 deterministic loop inside C under action 0; action 1 of either loop
// state leaks to 2, which drifts to the unsafe 3 w.p. 0.5 or back to 0.
inline DiscreteMdp safe_loop() {
    MdpBuilder b(4, 2);
    b.set_constraint(ConstraintMask({true, true, true, false}));
    b.set_row(0, 0, {{1, 1.0}});
    b.set_row(0, 1, {{2, 1.0}});
    b.set_row(1, 0, {{0, 1.0}});
    b.set_row(1, 1, {{2, 1.0}});
    b.set_row(2, 0, {{0, 0.5}, {3, 0.5}});
    b.set_row(2, 1, {{3, 1.0}});
    b.set_absorbing(3);
    return b.build();
}

}  // namespace fixtures
