#pragma once

#define ICBOOST_VERSION "0.1.0"
