#include "doctest.h"
#include "support.hpp"
#include "unistore/eval.hpp"

using namespace unistore;
using namespace testkit;

namespace {

struct EngineFixture {
  Engine engine;
  std::shared_ptr<const Session> admin = engine.admin_session();

  EngineFixture() { engine.submit(*admin, "define_concept", person_definition()); }
  Receipt create(json values) { return engine.submit(*admin, "create", {{"concept", "Person"}, {"values", values}}); }
  json values_of(ObjectId id, std::optional<StateIndex> state = std::nullopt) {
    return engine.read(state, [&](const Snapshot& s) { return to_json(s.describe(id).values); });
  }
  ErrorKind rejected(const std::string& kind, const json& payload) {
    const StoreSnapshot before = engine.snapshot();
    const std::size_t log_size = engine.log(1, engine.head()).size();
    const ErrorKind k = error_kind_of([&] { engine.submit(*admin, kind, payload); });
    CHECK(engine.snapshot() == before);
    CHECK(engine.log(1, engine.head()).size() == log_size);
    return k;
  }
};

}  // namespace

TEST_CASE("every accepted event advances the state by one") {
  EngineFixture fx;
  CHECK(fx.engine.head() == 1);
  const Receipt r = fx.create({{"name", "a"}, {"age", 3}});
  CHECK(r.state == 2);
  CHECK(r.created.size() == 1);
  fx.engine.submit(*fx.admin, "set_attr", {{"id", r.created[0]}, {"values", {{"age", 4}, {"city", "Omsk"}}}});
  CHECK(fx.values_of(r.created[0]) == json{{"name", "a"}, {"age", 4}, {"city", "Omsk"}});
  CHECK(fx.values_of(r.created[0], 2) == json{{"name", "a"}, {"age", 3}});
  fx.engine.submit(*fx.admin, "set_attr", {{"id", r.created[0]}, {"values", {{"city", nullptr}}}});
  CHECK_FALSE(fx.values_of(r.created[0]).contains("city"));
  CHECK(fx.engine.head() == 4);
}

TEST_CASE("invalid events are rejected without a trace") {
  EngineFixture fx;
  const ObjectId a = fx.create({{"name", "a"}}).created[0];
  CHECK(fx.rejected("create", {{"concept", "Person"}, {"values", {{"age", 3}}}}) == ErrorKind::Validation);
  CHECK(fx.rejected("create", {{"concept", "Person"}, {"values", {{"name", "b"}, {"height", 3}}}}) == ErrorKind::Validation);
  CHECK(fx.rejected("create", {{"concept", "Person"}, {"values", {{"name", "b"}, {"age", "old"}}}}) == ErrorKind::Validation);
  CHECK(fx.rejected("create", {{"concept", "Person"}, {"values", {{"name", "b"}, {"boss", 424242}}}}) == ErrorKind::Validation);
  CHECK(fx.rejected("create", {{"concept", "Nobody"}, {"values", {{"name", "b"}}}}) == ErrorKind::UnknownConcept);
  CHECK(fx.rejected("set_attr", {{"id", a}, {"values", {{"name", nullptr}}}}) == ErrorKind::Validation);
  CHECK(fx.rejected("teleport", json::object()) == ErrorKind::UnknownKind);
  CHECK(fx.rejected("create", {{"values", {{"name", "b"}}}}) == ErrorKind::Validation);
  // A batch is atomic: the good first event is dropped with the bad second one.
  CHECK(fx.rejected("batch", {{"events",
                                {{{"kind", "create"}, {"concept", "Person"}, {"values", {{"name", "ok"}}}},
                                 {{"kind", "create"}, {"concept", "Person"}, {"values", {{"age", 1}}}}}}}) ==
        ErrorKind::Validation);
  try {
    fx.engine.submit(*fx.admin, "create", {{"concept", "Person"}, {"values", {{"age", "x"}}}});
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.details().at("fields").size() == 2);
  }
}

TEST_CASE("a batch may reference objects it creates earlier") {
  EngineFixture fx;
  const Receipt r = fx.engine.submit(*fx.admin, "batch",
                                     {{"events", {{{"kind", "create"}, {"concept", "Person"}, {"values", {{"name", "boss"}}}}}}});
  const ObjectId boss = r.created[0];
  const Receipt r2 = fx.engine.submit(
      *fx.admin, "batch",
      {{"events",
        {{{"kind", "create"}, {"concept", "Person"}, {"values", {{"name", "x"}, {"boss", boss}}}},
         {{"kind", "retire"}, {"id", boss}}}}});
  CHECK(r2.created.size() == 1);
  CHECK(fx.engine.read(std::nullopt, [&](const Snapshot& s) { return s.alive(boss) == nullptr; }));
}

TEST_CASE("schemas can be extended with optional attributes") {
  EngineFixture fx;
  const ObjectId a = fx.create({{"name", "a"}}).created[0];
  fx.engine.submit(*fx.admin, "extend_concept",
                   {{"concept", "Person"}, {"attributes", {{{"name", "nick"}, {"type", "text"}}}}});
  fx.engine.submit(*fx.admin, "set_attr", {{"id", a}, {"values", {{"nick", "ace"}}}});
  CHECK(fx.values_of(a).at("nick") == "ace");
  CHECK(fx.rejected("extend_concept", {{"concept", "Person"}, {"attributes", {{{"name", "age"}, {"type", "text"}}}}}) ==
        ErrorKind::InvalidAttribute);
  CHECK(fx.rejected("define_concept", person_definition()) == ErrorKind::DuplicateName);
  CHECK(fx.rejected("define_concept", {{"name", "Thing"}, {"attributes", {{{"name", "x"}, {"type", "colour"}}}}}) ==
        ErrorKind::InvalidAttribute);
}

TEST_CASE("trigger rules reject, audit, set and create") {
  EngineFixture fx;
  fx.engine.submit(*fx.admin, "define_concept",
                   {{"name", "Note"}, {"attributes", {{{"name", "about"}, {"type", "reference(Person)"}}, {{"name", "text"}, {"type", "text"}}}}});
  fx.engine.register_rule(*fx.admin, {{"trigger", "create"},
                                      {"concept", "Person"},
                                      {"guard", "age < 0"},
                                      {"actions", {{{"reject", "age must not be negative"}}}}});
  fx.engine.register_rule(*fx.admin, {{"trigger", "create"},
                                      {"concept", "Person"},
                                      {"guard", "age >= 65"},
                                      {"actions",
                                       {{{"audit", "pensioner created"}},
                                        {{"set", {{"path", "self.active"}, {"value", false}}}},
                                        {{"create", {{"concept", "Note"}, {"values", {{"about", "$self"}, {"text", "retire soon"}}}}}}}}});
  try {
    fx.create({{"name", "x"}, {"age", -1}});
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RuleRejection);
    CHECK(std::string(e.what()).find("negative") != std::string::npos);
  }
  const Receipt young = fx.create({{"name", "y"}, {"age", 30}});
  CHECK(young.audit.empty());
  CHECK(young.created.size() == 1);
  const Receipt old = fx.create({{"name", "o"}, {"age", 70}});
  CHECK(old.audit == std::vector<std::string>{"pensioner created"});
  REQUIRE(old.created.size() == 2);
  CHECK(fx.values_of(old.created[0]).at("active") == false);
  CHECK(fx.values_of(old.created[1]).at("about") == old.created[0]);
  CHECK(error_kind_of([&] {
          fx.engine.register_rule(*fx.admin, {{"trigger", "create"}, {"concept", "Person"}, {"guard", "age = 'x'"}, {"actions", {{{"audit", "x"}}}}});
        }) == ErrorKind::TypeMismatch);
}

TEST_CASE("retiring a rule disables it") {
  EngineFixture fx;
  const ObjectId rule = fx.engine.register_rule(
      *fx.admin, {{"trigger", "create"}, {"concept", "Person"}, {"actions", {{{"reject", "closed"}}}}});
  CHECK(error_kind_of([&] { fx.create({{"name", "a"}}); }) == ErrorKind::RuleRejection);
  fx.engine.submit(*fx.admin, "retire", {{"id", rule}});
  CHECK_NOTHROW(fx.create({{"name", "a"}}));
}

TEST_CASE("rollback appends a marker and restores the earlier content") {
  EngineFixture fx;
  const ObjectId a = fx.create({{"name", "a"}}).created[0];
  const StoreSnapshot at = fx.engine.snapshot();
  fx.engine.submit(*fx.admin, "set_attr", {{"id", a}, {"values", {{"age", 9}}}});
  fx.create({{"name", "b"}});
  const StateIndex head = fx.engine.rollback(*fx.admin, at.state);
  CHECK(head == at.state + 3);
  CHECK(fx.engine.snapshot().content_hash == at.content_hash);
  CHECK(fx.values_of(a) == json{{"name", "a"}});
  // History before the marker is still readable.
  CHECK(fx.values_of(a, at.state + 1).at("age") == 9);
  const auto log = fx.engine.log(head, head);
  REQUIRE(log.size() == 1);
  CHECK(log[0].kind == "rollback_marker");
  CHECK(error_kind_of([&] { fx.engine.rollback(*fx.admin, head + 1); }) == ErrorKind::StateBeyondHead);
}

TEST_CASE("replay reproduces every state") {
  EngineFixture fx;
  NaiveWorld world;
  world.next();
  Rng rng(77);
  for (int i = 0; i < 20; ++i) random_person_batch(fx.engine, *fx.admin, world, rng, 4, 3, 1, 10);
  fx.engine.rollback(*fx.admin, 7);
  world.next();
  world.persons.back() = world.persons[7];
  for (int i = 0; i < 5; ++i) random_person_batch(fx.engine, *fx.admin, world, rng, 4, 3, 1, 10);
  for (StateIndex s = 0; s <= fx.engine.head(); ++s) CHECK(fx.engine.replay(s) == fx.engine.snapshot(s));
  CHECK(error_kind_of([&] { fx.engine.replay(fx.engine.head() + 1); }) == ErrorKind::StateBeyondHead);
}

TEST_CASE("sessions authenticate and close") {
  Engine engine;
  CHECK(error_kind_of([&] { engine.open_session({"admin", "wrong"}); }) == ErrorKind::AuthFailed);
  CHECK(error_kind_of([&] { engine.open_session({"ghost", "ghost"}); }) == ErrorKind::AuthFailed);
  auto s = engine.admin_session();
  CHECK(engine.session(s->id)->id == s->id);
  engine.close_session(s->id);
  CHECK(error_kind_of([&] { engine.session(s->id); }) == ErrorKind::SessionClosed);
  CHECK(error_kind_of([&] { engine.submit(*s, "define_concept", person_definition()); }) == ErrorKind::SessionClosed);
  CHECK(error_kind_of([&] { engine.session("nope"); }) == ErrorKind::AuthFailed);
}

TEST_CASE("appraisal weights are validated when written") {
  Engine engine;
  auto admin = engine.admin_session();
  CHECK(error_kind_of([&] {
          engine.submit(*admin, "set_attr", {{"id", builtin::kParamsObject}, {"values", {{"w_s", 0.7}}}});
        }) == ErrorKind::InvalidParams);
  CHECK_NOTHROW(engine.submit(*admin, "set_attr", {{"id", builtin::kParamsObject}, {"values", {{"w_s", 0.7}, {"w_p", 0.3}}}}));
  CHECK(error_kind_of([&] {
          engine.submit(*admin, "set_attr", {{"id", builtin::kParamsObject}, {"values", {{"w_local", 1.5}, {"w_child", -0.5}}}});
        }) == ErrorKind::InvalidParams);
}
