#pragma once

// Umbrella header. The HTTP client lives in ekcpd/embeddings_client.hpp and is
// not included here, so the core stays free of the networking dependency.

#include "ekcpd/error.hpp"
#include "ekcpd/sequence.hpp"
#include "ekcpd/kernel_cost.hpp"
#include "ekcpd/solver.hpp"
#include "ekcpd/penalty.hpp"
#include "ekcpd/metrics.hpp"
#include "ekcpd/synthgen.hpp"
#include "ekcpd/io.hpp"
