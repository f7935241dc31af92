#pragma once

#include "classroom/analytics/analytics.hpp"
#include "classroom/dataset/daisee.hpp"
#include "classroom/dataset/image_io.hpp"
#include "classroom/emotion/adam.hpp"
#include "classroom/emotion/checkpoint.hpp"
#include "classroom/emotion/classifier.hpp"
#include "classroom/emotion/cnn.hpp"
#include "classroom/emotion/emotion_class.hpp"
#include "classroom/emotion/image.hpp"
#include "classroom/emotion/metrics.hpp"
#include "classroom/emotion/probabilities.hpp"
#include "classroom/emotion/trainer.hpp"
#include "classroom/error.hpp"
#include "classroom/identity/embedding.hpp"
#include "classroom/identity/enrollment_file.hpp"
#include "classroom/identity/registry.hpp"
#include "classroom/ingest/base64.hpp"
#include "classroom/ingest/gateway.hpp"
#include "classroom/ingest/wire.hpp"
#include "classroom/server/http_api.hpp"
#include "classroom/server/http_client.hpp"
#include "classroom/session/engine.hpp"
#include "classroom/sim/crops.hpp"
#include "classroom/sim/scenario.hpp"
#include "classroom/sim/simulator.hpp"
#include "classroom/store/export.hpp"
#include "classroom/store/records.hpp"
#include "classroom/store/store.hpp"
#include "classroom/types.hpp"
