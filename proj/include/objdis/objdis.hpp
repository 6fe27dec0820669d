#pragma once

#include "objdis/error.hpp"
#include "objdis/estimator.hpp"
#include "objdis/frames.hpp"
#include "objdis/geometry.hpp"
#include "objdis/harness.hpp"
#include "objdis/odometry.hpp"
#include "objdis/policies.hpp"
#include "objdis/random.hpp"
#include "objdis/scene.hpp"
#include "objdis/sensors.hpp"
#include "objdis/serialization.hpp"
#include "objdis/task.hpp"
