#pragma once

#include <stdexcept>
#include <string>

namespace mew {

struct MewError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// dual-graph ingestion
struct ParseError : MewError {
    using MewError::MewError;
};
struct SelfLoopError : MewError {
    using MewError::MewError;
};
struct DuplicateEdgeError : MewError {
    using MewError::MewError;
};
struct MissingPopulationError : MewError {
    using MewError::MewError;
};
struct DisconnectedGraphError : MewError {
    using MewError::MewError;
};

// tree counting on a subset that does not induce a connected subgraph
struct DisconnectedSubsetError : MewError {
    using MewError::MewError;
};

// invalid run configuration (d < 2, graph is its own spanning tree, ...)
struct ConfigError : MewError {
    using MewError::MewError;
};

// initial balanced state not found within the attempt budget
struct InitFailureError : MewError {
    using MewError::MewError;
};

// enumeration search-node budget exceeded
struct WorkLimitError : MewError {
    using MewError::MewError;
};

}  // namespace mew
