#pragma once

// Umbrella header: the whole engine, source -> preprocess -> events ->
// metrics -> difficulty, plus replay/synthetic/live sources, recording and
// the TCP stream server.

#include "gazeflow/config.hpp"
#include "gazeflow/dda.hpp"
#include "gazeflow/detector.hpp"
#include "gazeflow/events.hpp"
#include "gazeflow/metrics.hpp"
#include "gazeflow/pipeline.hpp"
#include "gazeflow/preprocess.hpp"
#include "gazeflow/queue.hpp"
#include "gazeflow/raw_csv.hpp"
#include "gazeflow/recorder.hpp"
#include "gazeflow/server.hpp"
#include "gazeflow/source.hpp"
#include "gazeflow/stream_source.hpp"
#include "gazeflow/synthetic.hpp"
#include "gazeflow/types.hpp"
#include "gazeflow/vec3.hpp"
#include "gazeflow/wire.hpp"
