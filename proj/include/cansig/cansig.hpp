#pragma once

#include "cansig/attackgen.hpp"
#include "cansig/autoencoder.hpp"
#include "cansig/config.hpp"
#include "cansig/errors.hpp"
#include "cansig/ingest.hpp"
#include "cansig/matrix.hpp"
#include "cansig/metrics.hpp"
#include "cansig/order.hpp"
#include "cansig/pipeline.hpp"
#include "cansig/queue.hpp"
#include "cansig/record.hpp"
#include "cansig/report.hpp"
#include "cansig/scaler.hpp"
#include "cansig/stats.hpp"
#include "cansig/thresholds.hpp"
