// Copyright 2026 The qduffing Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <utility>

#include "qduffing/duffing_model.hpp"
#include "qduffing/fock.hpp"

namespace qduffing {

/// When the truncated basis is moved back onto the state.
struct RecenterPolicy {
  double threshold = 0.5;       ///< trigger on |alpha_loc| above this
  int tail_levels = 5;          ///< top Fock levels monitored
  double tail_tolerance = 1e-6; ///< warn above this, abort above 100x

  void validate() const;
};

struct RecenterResult {
  DensityMatrix rho;
  FrameOffset frame;
  bool moved = false;
};

/// Moves the basis onto the local mean alpha_loc = (<q> + i<p>)/sqrt2 when
/// |alpha_loc| exceeds the threshold: rho' = D(-alpha_loc) rho D(-alpha_loc)^dag
/// and the frame absorbs (<q>, <p>). Global means are unchanged.
RecenterResult recenter(const DensityMatrix& rho, const FrameOffset& frame,
                        const RecenterPolicy& policy, const OperatorTable& table);

/// In-place form used inside the integration loop. Returns true if the basis
/// was moved.
bool recenter_in_place(DensityMatrix& rho, FrameOffset& frame, const RecenterPolicy& policy,
                       const OperatorTable& table);

/// Population in the top `tail_levels` Fock levels.
double tail_population(const DensityMatrix& rho, int tail_levels);

}  // namespace qduffing
