from flask import Flask
from dotenv import load_dotenv
import os


# Load environment variables from .env file (the generation auth token usually lives there)
load_dotenv()


# Setup of key Flask object (app)
app = Flask(__name__)

# Configure Flask to handle JSON with UTF-8 encoding versus default ASCII
app.config['JSON_AS_ASCII'] = False


# Corpus and report locations
app.config['CORPUS_DIR'] = os.environ.get('MRADOPT_CORPUS_DIR') or 'corpus'
app.config['OUTPUT_DIR'] = os.environ.get('MRADOPT_OUTPUT_DIR') or 'out'
app.config['FIXTURE_DIR'] = os.environ.get('MRADOPT_FIXTURE_DIR') or None


# Generation backend settings
app.config['BACKEND'] = os.environ.get('MRADOPT_BACKEND') or 'replay'
app.config['ENDPOINT_URL'] = os.environ.get('MRADOPT_ENDPOINT_URL') or None
app.config['MODEL'] = os.environ.get('MRADOPT_MODEL') or 'gpt-4o-mini'
app.config['AUTH_TOKEN_ENV_VAR'] = 'MRADOPT_API_TOKEN'  # name of the variable, never the token
app.config['TIMEOUT_SECONDS'] = 30.0
app.config['MAX_RETRIES'] = 3
app.config['SYNTH_PROFILE'] = 'default'


# Generation request sizes
app.config['EXAMPLES_PER_REQUEST'] = 5
app.config['REPETITIONS'] = 5
app.config['TEMPERATURE'] = 0.2
app.config['SEED'] = 0
app.config['PARALLELISM'] = int(os.environ.get('MRADOPT_PARALLELISM') or 1)


# Pipeline and evaluation
app.config['ABLATE'] = None
app.config['DEDUP'] = True
app.config['MAX_STEPS'] = 100_000
app.config['POOL_EXAMPLES'] = 5
app.config['POOL_REPETITIONS'] = 10
app.config['SELECT_SEED'] = None
app.config['REPORT_TIMINGS'] = False


# Logging
app.config['LOG_LEVEL'] = os.environ.get('MRADOPT_LOG_LEVEL') or 'WARNING'
app.logger.setLevel(app.config['LOG_LEVEL'])
