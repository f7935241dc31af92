// Trains a small emotion model, enrolls a simulated class, plays five minutes
// of detections through the gateway and prints the session summary.

#include <iostream>

#include "classroom/classroom.hpp"

using namespace classroom;

int main() {
  AdamConfig adam;
  adam.epochs = 4;
  const auto model = train(sim::synthetic_crop_dataset(60, 11), adam, 11).model;

  Store store;  // in-memory
  EnrollmentRegistry registry;
  SessionEngine engine(store, registry, std::make_shared<CnnClassifier>(model));
  IngestionGateway gateway(engine);

  sim::SimScenario scenario;
  scenario.student_count = 12;
  scenario.absent_students = {"s04"};
  scenario.intruder_count = 1;
  scenario.embedding_noise_sigma = 0.02;
  const auto students = sim::generate_students(scenario);
  sim::enroll_students(engine, students);

  const Session session = engine.start_session("demo", 0);
  sim::run_scenario(scenario, students, gateway, sim::RunOptions{session.session_id, 0, true, {}});
  engine.end_session(session.session_id, scenario.tick_count() * scenario.tick_ms);

  Analytics analytics(engine);
  std::cout << api::to_json(analytics.session_summary(session.session_id)).dump(2) << '\n';
  std::cout << api::to_json(analytics.emotion_distribution(session.session_id)).dump(2) << '\n';
}
