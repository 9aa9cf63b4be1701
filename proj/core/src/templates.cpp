// Default prompt bodies. The category taxonomy appears in two wordings, one
// ending the first criterion in "user rating" and one in "has been rated
// highly"; each template keeps the wording of its source.

#include <string>

namespace superb::detail {

namespace {

const std::string kCategoriesUserRating =
    "3. Overall Best: The item meets the following criteria: The item is overall best in its "
    "category on various parameters -- excellence in quality, user experience, value for money, "
    "innovation, aesthetics, environmental impact, market position, safety, versatility, "
    "processing speed, user rating, etc..\n"
    "2. Almost Best: The item scores high on most or majority of the parameters except for a "
    "few. Most users would consider this as item as the best..\n"
    "1. Relevant But Not Best: The item is suitable in certain contexts but not the best "
    "option..\n"
    "0. Not Relevant: The item is generally not recommended as it is not relevant to the user's "
    "query..";

const std::string kCategoriesRatedHighly =
    "3. Overall Best: The item meets the following criteria: The item is overall best in its "
    "category on various parameters -- excellence in quality, user experience, value for money, "
    "innovation, aesthetics, environmental impact, market position, safety, versatility, "
    "processing speed, has been rated highly, etc..\n"
    "2. Almost Best: The item scores high on most or majority of the parameters except for a "
    "few. Most users would consider this as item as the best..\n"
    "1. Relevant But Not Best: The item is suitable in certain contexts but not the best "
    "option..\n"
    "0. Not Relevant: The item is generally not recommended as it is not relevant to the user's "
    "query..";

}  // namespace

extern const std::string kSuperlativeGenTemplate = R"(Given a query, generate multiple diverse superlative versions of the same which require common sense inference. The reformulated superlative queries should provide additional context for which common sense knowledge is required. The context should be related to the item in the original query in various ways and should seek the highest degree of some related aspects. For instance, if a user is looking for a mouse pad, she might be interested in the best one which best complements the color of her laptop, or may require the most suitable one for painful wrists, etc. The context should require generally understood knowledge and common sense and it should not depend on objective criteria like highest rated or cheapest. Some examples of superlative queries are "Best booster chairs to make mealtime hassle-free for my toddler", "most user-friendly diaper pail to make my life as a new mom easier", "most suitable lawnmover for rocky areas", "most stylish and modern changing table pad to complement my nursery decor","Smoothest-riding 2 seater stroller for twin toddlers","Best diaper genie for sparking a child's creativity","Highest quality epoxy resin for creating stunning wood art pieces", You should not try to change the type of the product which the user is asking for. Only if the product explicitly mentions a single product, you should change it to make it more generalized (for instance, Amazon $100 gift card can be changed to $100 gift card and so on). Do not generate anything else except for one body of JSON and do not explain yourself. Do not include double quotes while generating the superlatives.

Provide your output in the form of a JSON.

Input Query: LEGO kit
{{
  "superlatives" : [
      "best LEGO kit for chess players",
      "best lego kits for marvel fans",
      "most impressive lego kits for my friend who is fascinated about India",
      "best lego kit to encourage my toddler to learn astronomy",
  ]
}}

Input Query: black halter beaded satin long gowns sequin
{{
  "superlatives": [
    "Trendiest black halter beaded satin long gowns with sequins for an Afro-themed fashion parade",
    "Best halter beaded satin long gowns to match my husband's black silk coat",
    "Most casual black halter satin long gowns with sequins helpful ",
    "most suitable black halter beaded satin long gowns sequin for a date night"
  ]
}}

Input Query: armani exchange glasses
{{
  "superlatives": [
    "best glasses with bold and trendy frames",
    "best glasses which can be used for office and at parties",
    "best retro look armani exchange glasses",
    "most suitable armani exchange glasses for travelling to dubai and mexico" ,
    "best armani exchange glasses that blend seamlessly with my red jeans",
  ]
}}

Input Query: {query})";

extern const std::string kPointwiseTemplate =
    R"(Based on the item description and some of its reviews, your internal knowledge about all the features of such types of items, and a user's given shopping query, you should classify the item into one of the taxonomy categories:

User Query: {query}
Item Description: Title: {title} Description: {description}
User Query: {query}

Categories:
)" + kCategoriesUserRating +
    R"(

Please classify the item into one of the four types. You should return a number between between 3 (Overall Best) and 0 (Not Relevant) followed by an explanation on the next line justifying why that category of best is suitable.)";

extern const std::string kPairwiseTemplate =
    R"(Based on the following descriptions of two items, their reviews, and a user's shopping query, you need to rank each item into one of the taxonomy categories:

User Query: {query}
{items}
User Query: {query}

Categories:
)" + kCategoriesRatedHighly +
    R"(

Please rank each item into one of the four types. First, return two numbers separated by ' ' where each number ranges between between 3 (Overall Best) and 0 (Not Relevant). And then briefly explain why the category of best is suitable.)";

extern const std::string kListwiseAnnotateTemplate =
    R"(Based on the following descriptions of multiple items and a user's shopping query, you need to classify each item into one of the taxonomy categories:

User Query: {query}
{items}
User Query: {query}

Classification Categories:
)" + kCategoriesRatedHighly +
    R"(

Please rank each item into one of the four types. First, return the rankings as numbers separated by ' ' where each number ranges between between 3 (Overall Best) and 0 (Not Relevant). And then provide a short explanation as to why you assigned the best categories. You should start your answer with only the rankings (i.e. 3 2 2 0 and so on ) and not a description. Ensure that the number of rankings is equal to the number of items shown i.e. exactly {K}.)";

extern const std::string kDeliberateAttrsTemplate =
    R"(Given a user seeking the best item, define the ideal requirements for satisfying the user query by returning a list of attributes which are essential for that item. For instance, if the user is seeking the best laptop for his 15 year old son, the attributes could be a large RAM, the best GPUs (maybe from NVIDIA or AMD), good speakers etc. You should try to come up attributes which are essential for the perfect or the best item as well as which satisfy the user query. Return your output as a json. Do not generate anything else.
{query})";

extern const std::string kDeliberatedPointwiseTemplate =
    R"(Based on the item description, its reviews, and a user's shopping query, you need to rank the item into one of the taxonomy categories:

User Query: {query}
The best item would possibly possess many of such attributes: {attributes}
Item Description: Title: {title} Description: {description}
User Query: {query}

Categories:
)" + kCategoriesRatedHighly +
    R"(

Please rank the item into one of the four types. You should return a number between between 3 (Overall Best) and 0 (Not Relevant) followed by an explanation on the next line justifying why that category of best is suitable.)";

extern const std::string kPointwiseConfidenceTemplate =
    R"(Based on the item description and some of its reviews, your internal knowledge about all the features of such types of items, and a user's given shopping query, you should classify the item into one of the taxonomy categories and provide a confidence score for your prediction:

User Query: {query}
The best item would possibly possess many of such attributes: {attributes}
Item Description: Title: {title} Description: {description}
User Query: {query}

Categories:
)" + kCategoriesUserRating +
    R"(

You should return a number between between 3 (Overall Best) and 0 (Not Relevant) followed by the confidence of your prediction between 1 to 9 and an explanation on the next line justifying why that category of best is suitable. Your output should look something like this: 2 8 some explanation or 3 4 some explanation. If you are fully confident, then your confidence should have high values like 7, 8 upto 9. If you are not sure, then you should assign low confidence values like 1, 2 or 3. If you are partially confident, then assign other values.)";

extern const std::string kListwiseRankTemplate =
    R"(Based on the following descriptions of multiple items and a user's shopping query, you need to rank the items using the below taxonomy:

User Query: {query}
{items}
User Query: {query}

Classification Categories:
)" + kCategoriesRatedHighly +
    R"(

The 'Overall Best' item(s) should be ranked higher, followed by the 'Almost Best' item(s), the 'Relevant But not the best' and then the 'not relevant' ones. You should return the item ids separated by ' ' something like 8 3 9 1 2... You should start your answer with only the rankings and not a description. Ensure that each item id is present in the list. Ensure that the number of rankings is equal to the number of items shown i.e. exactly {K}.)";

}  // namespace superb::detail
