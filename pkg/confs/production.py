production_config = {
    "environment": "production",
    "debug": False,
    "log_level": "WARNING",
    "nr_tolerance": 1e-8,
    "nr_max_iterations": 30,
    "nr_flat_start": True,
    "threads": 4,
    "gamma_nc_resolution_mw": 0.1,
    "float_digits": 10,
    "sentry": {
        "active": False,
        "connection_string": ""
    }
}
