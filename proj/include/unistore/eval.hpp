#pragma once

#include <map>
#include <string>

#include "unistore/formula.hpp"
#include "unistore/store.hpp"

namespace unistore {

// The object a formula is evaluated against: a stored object, or a draft
// (values not yet in the store, e.g. a create payload) of a given concept.
struct Subject {
  ObjectId id = 0;
  ObjectId concept_id = 0;
  const ValueMap* draft = nullptr;

  static Subject object(ObjectId id) { return Subject{id, 0, nullptr}; }
  static Subject of_draft(ObjectId concept_id, const ValueMap& values) { return Subject{0, concept_id, &values}; }
};

struct Binding {
  Subject self;
  std::map<std::string, ObjectId> vars;
};

// Two-valued truth of a formula at the snapshot's state. Absent values and
// broken reference hops make the atom false.
// Throws UnknownDomain, UnknownAttribute, TypeMismatch.
bool evaluate(const Formula& formula, const Binding& binding, const Snapshot& snap);
bool evaluate(const Formula& formula, ObjectId self, const Snapshot& snap);

// Static check of every path and literal against the schema of the subject
// concept; evaluation of a checked formula cannot raise schema errors.
void typecheck(const Formula& formula, ObjectId subject_concept, const Snapshot& snap);

// Max level over referenced domains (concept = 1, meta = its level); 0 when
// the formula references no domain.
int level_of(const Formula& formula, const Snapshot& snap);

}  // namespace unistore
