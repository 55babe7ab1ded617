#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "unistore/engine.hpp"

namespace unistore {

struct SeedOptions {
  int employees = 100;
  // Every position filled by a holder possessing exactly its required functions.
  bool perfect = false;
  std::uint32_t seed = 20240601;
};

struct SeedSummary {
  StateIndex state = 0;
  ObjectId root = 0;
  std::vector<ObjectId> units;
  std::vector<ObjectId> positions;
  std::vector<ObjectId> employees;

  nlohmann::json to_json() const;
};

// Deterministic demo corporation: 21 units (root, 4 divisions, 16
// departments), leadership and staff positions, working-function
// assignments, some vacancies, and one login per employee ("u<n>",
// password equal to the login). Throws PacksMissing without Personal Data.
SeedSummary seed_demo(Engine& engine, const Session& session, const SeedOptions& options);

}  // namespace unistore
