#pragma once

#define SELRET_VERSION "0.1.0"
