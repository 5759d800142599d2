local_config = {
    "environment": "local",
    "debug": True,
    "log_level": "DEBUG",
    "nr_tolerance": 1e-8,
    "nr_max_iterations": 30,
    "nr_flat_start": True,
    "threads": 1,
    "gamma_nc_resolution_mw": 0.1,
    "float_digits": 10,
    "sentry": {
        "active": False,
        "connection_string": ""
    }
}
