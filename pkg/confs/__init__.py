from confs.development import development_config
from confs.local import local_config
from confs.production import production_config

CONFIG_LOOKUP = {
    'local': local_config,
    'development': development_config,
    'production': production_config
}
